"""Reference generation backend for the reframing pipeline.

Trains small seq2seq models by executing emitted phase plans
(pretrain -> finetune -> adversarial) over training JSONL files, and
serves the resulting checkpoints through the /v1 HTTP protocol.
"""

from .data import Plan, PlanError, load_plan, serialize_request
from .model import DecodeParams, decode
from .server import ModelStore, ServingConfig, make_server, serve
from .training import PRESETS, execute_plan, load_checkpoint

__version__ = "0.1.0"
