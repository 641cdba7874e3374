"""DPFNet low-light image enhancement: python surface over the C++ core."""

try:
    from ._dpfnet import (  # noqa: F401
        enhance,
        evaluate,
        fft2,
        ifft2,
        load_image,
        psnr,
        save_image,
        ssim,
        train,
    )
except ImportError:  # in-tree builds put the extension next to the package
    from _dpfnet import (  # noqa: F401
        enhance,
        evaluate,
        fft2,
        ifft2,
        load_image,
        psnr,
        save_image,
        ssim,
        train,
    )

__all__ = [
    "enhance",
    "evaluate",
    "fft2",
    "ifft2",
    "load_image",
    "psnr",
    "save_image",
    "ssim",
    "train",
]
