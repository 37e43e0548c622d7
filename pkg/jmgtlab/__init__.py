"""JMGTLab - numerical laboratory for the Jordan-Moore-Gibson-Thompson equation."""

__version__ = "0.1.0"
