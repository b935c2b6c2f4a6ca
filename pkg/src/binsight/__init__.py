"""binsight: static PE features, byte-images, and exact k-NN for malware triage."""

__version__ = "0.1.0"
