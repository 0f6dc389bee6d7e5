"""3D iris surface reconstruction and quantification from per-slice
boundaries, with a wavelet-refined segmentation net and a point-set
classifier for angle-closure screening."""

__version__ = "0.1.0"
