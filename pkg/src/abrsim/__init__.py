"""Cell-level simulator of TCP over ATM ABR with LRD MPEG-2 VBR background traffic."""

__version__ = "0.1.0"
