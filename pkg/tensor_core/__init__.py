from tensor_core.activations import relu, relu_backward, sigmoid, sigmoid_backward
from tensor_core.conv import conv2d_backward, conv2d_forward
from tensor_core.dense import dense_backward, dense_forward
from tensor_core.loss import softmax, softmax_xent
from tensor_core.normalization import (
    BatchNormCache,
    RunningStats,
    batchnorm_backward,
    batchnorm_forward,
    lrn_backward,
    lrn_forward,
)
from tensor_core.params import ConvParams, LrnParams
from tensor_core.pooling import (
    PoolGeometry,
    PoolIndices,
    avgpool_backward,
    avgpool_forward,
    maxpool_backward,
    maxpool_forward,
)
from tensor_core.regularization import INFER, TRAIN, dropout, dropout_backward
from tensor_core.resize import resize_bilinear
from tensor_core.state import deterministic_mode, is_deterministic, set_deterministic, set_num_threads
from tensor_core.tensor import NARROW, WIDE, Tensor, as_tensor, flatten, unflatten
