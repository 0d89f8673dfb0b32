"""sempose: a desk-scale lab for semantic pose-over-the-air links.

A learned variable-rate symbol codec with a channel-aware rate regularizer,
an AWGN link driven by per-sample SNR feedback, a latency-budgeted symbol
count policy, and the training/evaluation harness around them.
"""

__version__ = "0.1.0"
