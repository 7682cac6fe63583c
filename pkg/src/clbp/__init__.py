"""Color local binary pattern face identification toolkit."""

from .errors import ClbpError, NoSkinRegionError
from .imaging import Colorspace, PlanarImage, read_image, write_image

__version__ = "0.1.0"

__all__ = ["ClbpError", "NoSkinRegionError", "Colorspace", "PlanarImage", "read_image", "write_image"]
