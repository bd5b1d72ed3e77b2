import numpy as np
import pytest

from stareid.backbone import FeatureMapSet
from stareid.backbone import backbone_forward
from stareid.backbone import init_backbone
from stareid.backbone import load_feature_maps
from stareid.backbone import save_feature_maps
from stareid.backbone import tiny_backbone_forward
from stareid.backbone.tiny import layer_padding
from stareid.errors import ConfigurationError
from stareid.errors import FormatError
from stareid.numerics import GradPair
from stareid.numerics import gradcheck

_SEED = 12345


def _create_maps(shape=(2, 4, 2, 3), seed=0):
    return FeatureMapSet(np.random.RandomState(seed).uniform(0, 1, size=shape))


def test_feature_map_set_validates():
    with pytest.raises(ValueError):
        FeatureMapSet(-np.ones((1, 2, 2, 1)))
    with pytest.raises(ValueError):
        FeatureMapSet(np.ones((2, 2, 1)))


def test_staf_round_trip(tmp_path):
    fms = _create_maps()
    path = str(tmp_path / 'features.staf')
    save_feature_maps(path, fms)
    loaded = load_feature_maps(path)

    assert loaded.shape == fms.shape
    assert loaded.clamped == 0
    np.testing.assert_array_equal(loaded.maps, fms.maps.astype(np.float32))


def test_staf_truncated_and_bad_magic(tmp_path):
    path = tmp_path / 'features.staf'
    save_feature_maps(str(path), _create_maps())
    blob = path.read_bytes()

    path.write_bytes(blob[:-4])
    with pytest.raises(FormatError, match="offset {}".format(len(blob) - 4)):
        load_feature_maps(str(path))

    path.write_bytes(b'XXXX' + blob[4:])
    with pytest.raises(FormatError, match="offset 0"):
        load_feature_maps(str(path))

    path.write_bytes(blob[:10])
    with pytest.raises(FormatError):
        load_feature_maps(str(path))


def test_staf_clamps_negatives(tmp_path):
    path = tmp_path / 'features.staf'
    save_feature_maps(str(path), _create_maps())
    blob = bytearray(path.read_bytes())
    # First payload value becomes -1.0f.
    blob[24:28] = np.array([-1.0], dtype='<f4').tobytes()
    path.write_bytes(bytes(blob))

    loaded = load_feature_maps(str(path))
    assert loaded.clamped == 1
    assert loaded.maps.min() >= 0


def test_layer_padding():
    assert layer_padding(3, 1) == 1
    assert layer_padding(4, 2) == 1
    assert layer_padding(1, 1) == 0


def test_backbone_output_shape_and_sign():
    rng = np.random.RandomState(_SEED)
    params = init_backbone(rng, channels=(4, 6), strides=(1, 2))
    frames = rng.uniform(0, 1, size=(3, 32, 16, 3))

    fms = tiny_backbone_forward(frames, params)
    assert fms.shape == (3, 16, 8, 6)
    assert params.output_size(32, 16) == (16, 8)
    assert fms.maps.min() >= 0


def test_backbone_rejects_bad_shapes():
    rng = np.random.RandomState(_SEED)
    params = init_backbone(rng, channels=(4, ), strides=(2, ))
    with pytest.raises(ConfigurationError):
        params.output_size(33, 16)
    with pytest.raises(ConfigurationError):
        init_backbone(rng, channels=(4, 4), strides=(1, ))
    with pytest.raises(ConfigurationError):
        backbone_forward(np.ones((2, 8, 8, 1)), params)


def test_backbone_kernel_gradient():
    rng = np.random.RandomState(_SEED)
    params = init_backbone(rng, channels=(2, 3), strides=(1, 2))
    frames = rng.uniform(0, 1, size=(2, 8, 4, 3))
    weights = rng.randn(2, 4, 2, 3)

    def f(kernel):
        params.kernels[1] = kernel
        out = backbone_forward(frames, params)
        return GradPair(float((out.value * weights).sum()), lambda g: out.backward(weights * g)[0][1])

    assert gradcheck(f, params.kernels[1].copy()) < 1e-5
