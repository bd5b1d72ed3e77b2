import abc


class Module(abc.ABC):
    """
    The unit of pluggability in stareid is called a 'module'.

    A module is a Python class implementing one of the protocols below; which
    class runs is decided by the profile / run configuration, never by an
    import in another module.
    """
    @abc.abstractmethod
    def __init__(self, config):
        """
        Modules are initialized with a config `dict` of run parameters.
        """
    @abc.abstractmethod
    def get_name(self):
        """
        Return the module's unique name.
        """


class Aggregator(Module):
    """
    Aggregators turn the per-frame feature maps of a batch of clips into the
    fused maps consumed by the projection head.
    """
    # Frame-level aggregators keep the frame axis: every frame is embedded on
    # its own and the clip embedding is the mean of the frame embeddings.
    frame_level = False

    @abc.abstractmethod
    def aggregate(self, features):
        """
        `features` is (B, N, H, W, D). Return a GradPair whose value is
        (B, H, W, 2D), or (B, N, H, W, 2D) when `frame_level`, and whose
        backward maps the upstream gradient to the gradient of `features`.
        """
