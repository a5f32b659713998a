from .config import ModelConfig
from .network import ModelOutput, PromptSegModel, build_attention_mask
