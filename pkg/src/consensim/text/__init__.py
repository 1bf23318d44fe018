"""Text-space adapters: prompt templates, provider clients, and the
sentence-level operations built on them."""
