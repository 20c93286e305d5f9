# debuglin - exact simulation and debugging of SGD-trained linear classifiers

__version__ = '0.1.0'
