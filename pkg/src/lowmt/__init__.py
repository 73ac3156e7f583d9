"""Low-resource machine translation toolkit.

Pipelines for pseudo-translation and knowledge distillation on toy corpora,
exact BLEU/chrF++ scoring, and a per-sentence inference latency benchmark.
"""

__version__ = "0.1.0"
