"""Bridge from public wireframe datasets and array data to the toolkit formats."""

from .convert import convert_annotations, convert_file
from .formats import AdapterError
from .tensor import export_tensor

__version__ = "0.1.0"
