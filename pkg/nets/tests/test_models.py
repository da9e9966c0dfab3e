import pytest
import torch

from rmnets import (
    ENV_SIZE,
    INPUT_SIZE,
    MATERIAL_DIM,
    IlluminationNet,
    JointNet,
    MaterialNet,
    build_model,
)


def _x(batch=2, seed=0):
    torch.manual_seed(seed)
    return torch.randn(batch, 3, INPUT_SIZE, INPUT_SIZE)


class TestShapes:
    def test_material_emits_seven_values(self):
        torch.manual_seed(0)
        out = MaterialNet()(_x())
        assert out.shape == (2, MATERIAL_DIM)
        assert torch.isfinite(out).all()

    def test_illumination_emits_half_resolution_map(self):
        torch.manual_seed(0)
        out = IlluminationNet()(_x())
        assert out.shape == (2, 3, ENV_SIZE, ENV_SIZE)
        assert ENV_SIZE == INPUT_SIZE // 2
        assert torch.isfinite(out).all()

    def test_joint_emits_both(self):
        torch.manual_seed(0)
        mat, env = JointNet()(_x())
        assert mat.shape == (2, MATERIAL_DIM)
        assert env.shape == (2, 3, ENV_SIZE, ENV_SIZE)

    @pytest.mark.parametrize("shape", [(2, 3, 64, 64), (2, 3, 128, 64), (2, 1, 128, 128), (3, 128, 128)])
    def test_wrong_input_shape_rejected(self, shape):
        torch.manual_seed(0)
        net = MaterialNet()
        with pytest.raises(ValueError, match="128"):
            net(torch.zeros(*shape))

    def test_build_model_kinds(self):
        assert isinstance(build_model("material"), MaterialNet)
        assert isinstance(build_model("illumination"), IlluminationNet)
        assert isinstance(build_model("joint"), JointNet)
        with pytest.raises(ValueError, match="kind"):
            build_model("both")


class TestJointSharing:
    def test_heads_consume_the_same_trunk_activation(self):
        torch.manual_seed(1)
        net = JointNet()
        x = _x(1, seed=2)
        mat, env = net(x)
        f1, f2 = net.trunk(x)
        assert torch.equal(net.material_head(f2), mat)
        assert torch.equal(net.illumination_head(f1, f2), env)

    def test_single_trunk_module(self):
        net = JointNet()
        trunks = [m for m in net.modules() if type(m).__name__ == "Trunk"]
        assert len(trunks) == 1


class TestDeterminism:
    def test_same_seed_same_weights(self):
        torch.manual_seed(7)
        a = JointNet().state_dict()
        torch.manual_seed(7)
        b = JointNet().state_dict()
        assert a.keys() == b.keys()
        for k in a:
            assert torch.equal(a[k], b[k])

    def test_forward_is_repeatable(self):
        torch.manual_seed(3)
        net = IlluminationNet()
        x = _x(1, seed=4)
        assert torch.equal(net(x), net(x))
