from netdef.builders import build_alexnet, build_network, build_tranet, default_input_size
from netdef.checkpoint import checkpoint_param_count, load_checkpoint, save_checkpoint
from netdef.network import ForwardCache, Network, ParamGrads, backward, forward, init_params
from netdef.spec import LayerKind, LayerSpec, NetworkSpec, infer_shapes, param_count, param_shapes
