from stareid.numerics.ops import GradPair
from stareid.numerics.ops import conv2d
from stareid.numerics.ops import relu
from stareid.numerics.ops import global_avg_pool
from stareid.numerics.ops import fully_connected
from stareid.numerics.gradcheck import gradcheck
from stareid.numerics.gradcheck import numeric_gradient
