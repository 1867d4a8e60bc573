"""Channel feature extraction, exact t-SNE and baseline embeddings for scenario identification."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    FrequencyDomainResponse,
    PowerDelayProfile,
    TimeDomainResponse,
    UniformGrid,
    power_delay_profile,
    to_frequency_domain,
    to_time_domain,
)
from .embedding import Embedding  # noqa: E402
from .features import FeatureVector, extract_features  # noqa: E402
from .tsne import TsneConfig, run_tsne  # noqa: E402
from .baselines import embed_baseline  # noqa: E402
from .scenarios import ChannelDataset, ModificationSpec, ScenarioSpec, generate_dataset  # noqa: E402

__all__ = [
    "FrequencyDomainResponse", "PowerDelayProfile", "TimeDomainResponse", "UniformGrid",
    "power_delay_profile", "to_frequency_domain", "to_time_domain", "Embedding", "FeatureVector",
    "extract_features", "TsneConfig", "run_tsne", "embed_baseline", "ChannelDataset",
    "ModificationSpec", "ScenarioSpec", "generate_dataset",
]
