from .datasets import SyntheticTaskSpec, generate_dataset

__all__ = ["SyntheticTaskSpec", "generate_dataset"]
