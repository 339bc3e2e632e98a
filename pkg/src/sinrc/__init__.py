"""Link scheduling under the SINR model via sub-linear conflict graphs."""

__version__ = "0.1.0"
