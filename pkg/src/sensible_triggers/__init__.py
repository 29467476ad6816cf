"""Universal adversarial triggers, sensible triggers and adversarial fine-tuning
for a mean-of-embeddings sentiment classifier."""

__version__ = "0.1.0"
