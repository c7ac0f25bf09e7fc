"""Metrics, image and spec I/O, and the experiment runner."""

from .metrics import cons, mse, psnr, ssim
from .pnm import PNMError, read_pnm, write_pnm
from .runner import ablation_report, run_experiment

__all__ = ["cons", "mse", "psnr", "ssim", "PNMError", "read_pnm", "write_pnm", "ablation_report", "run_experiment"]
