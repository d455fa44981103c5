import hashlib

import numpy as np
import pytest
import torch

from conftest import MINI_DETECTOR_SPEC, MINI_WIDTHS, mini_pair
from irdetect.errors import ConfigurationError, DataLoadError
from irdetect.models.checkpoint import load_checkpoint, save_checkpoint
from irdetect.models.detector import (DEFAULT_DETECTOR_SPEC, PatchScorer,
                                      SCORE_EPS, detector_spec_from_channels,
                                      score_grid, validate_layer_spec)
from irdetect.models.factory import ArchConfig, init_models, parameter_count
from irdetect.models.inpainter import InpainterNet, inpaint

# ---------------------------------------------------------------- references

LEAKY = 0.2


def _conv2d_ref(x, weight, bias, stride):
    # direct correlation with zero padding kernel//2, float64
    cout, cin, k, _ = weight.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    oh = (x.shape[1] + 2 * pad - k) // stride + 1
    ow = (x.shape[2] + 2 * pad - k) // stride + 1
    out = np.zeros((cout, oh, ow))
    for o in range(cout):
        for i in range(oh):
            for j in range(ow):
                patch = xp[:, i * stride:i * stride + k, j * stride:j * stride + k]
                out[o, i, j] = (patch * weight[o]).sum() + bias[o]
    return out


def _leaky_ref(x):
    return np.where(x > 0, x, LEAKY * x)


def _sigmoid_ref(x):
    return 1.0 / (1.0 + np.exp(-x))


def _upsample_nearest_ref(x, size):
    h, w = x.shape[1:]
    rows = np.floor(np.arange(size[0]) * (h / size[0])).astype(int)
    cols = np.floor(np.arange(size[1]) * (w / size[1])).astype(int)
    return x[:, rows][:, :, cols]


def _detector_ref(model, x):
    params = {k: v.detach().numpy().astype(np.float64) for k, v in model.state_dict().items()}
    h = x.astype(np.float64)
    n = len(model.layer_spec)
    for li, ((_, _), _, stride) in enumerate(model.layer_spec):
        h = _conv2d_ref(h, params[f"convs.{li}.weight"], params[f"convs.{li}.bias"], stride)
        if li < n - 1:
            h = _leaky_ref(h)
    return np.clip(_sigmoid_ref(h[0]), SCORE_EPS, 1 - SCORE_EPS)


def _inpainter_ref(model, x):
    params = {k: v.detach().numpy().astype(np.float64) for k, v in model.state_dict().items()}
    skips = [x.astype(np.float64)]
    h = x.astype(np.float64)
    for li in range(len(model.widths)):
        h = _leaky_ref(_conv2d_ref(h, params[f"enc.{li}.weight"], params[f"enc.{li}.bias"], 2))
        skips.append(h)
    skips.pop()
    for li in range(len(model.widths) - 1):
        skip = skips.pop()
        up = _upsample_nearest_ref(h, skip.shape[1:])
        h = _leaky_ref(_conv2d_ref(np.concatenate([up, skip]),
                                   params[f"dec.{li}.weight"], params[f"dec.{li}.bias"], 1))
    x0 = skips.pop()
    up = _upsample_nearest_ref(h, x0.shape[1:])
    h = _leaky_ref(_conv2d_ref(np.concatenate([up, x0]),
                               params["head.weight"], params["head.bias"], 1))
    return _sigmoid_ref(_conv2d_ref(h, params["out.weight"], params["out.bias"], 1))


def _randomize(model, seed):
    rng = np.random.default_rng(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.from_numpy(rng.normal(0, 0.4, size=tuple(p.shape))))
    return model


# ------------------------------------------------------------------ detector

def test_detector_output_shapes_and_range():
    det = PatchScorer()
    for hw, grid in (((308, 308), (11, 11)), ((140, 140), (5, 5)), ((28, 28), (1, 1))):
        x = torch.rand(2, 3, *hw)
        out = det(x)
        assert out.shape == (2,) + grid
        assert (out > 0).all() and (out < 1).all()


def test_detector_matches_reference_convolutions():
    det = _randomize(PatchScorer(MINI_DETECTOR_SPEC), 3).double()
    x = np.random.default_rng(4).random((3, 12, 12))
    got = det(torch.from_numpy(x).unsqueeze(0)).squeeze(0).detach().numpy()
    want = _detector_ref(det, x)
    assert got.shape == want.shape == (3, 3)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_zeroed_detector_scores_half():
    det = PatchScorer(MINI_DETECTOR_SPEC)
    with torch.no_grad():
        for p in det.parameters():
            p.zero_()
    out = det(torch.rand(1, 3, 16, 16))
    assert torch.allclose(out, torch.full_like(out, 0.5))


def test_score_grid_wrapper():
    _, det = mini_pair(seed=2)
    x = np.random.default_rng(0).random((3, 16, 16), dtype=np.float32)
    s = score_grid(det, x)
    assert s.shape == (4, 4) and s.dtype == np.float32
    assert np.array_equal(s, score_grid(det, x))
    with pytest.raises(ValueError, match="3, H, W"):
        score_grid(det, x[0])
    with pytest.raises(ValueError, match="expects"):
        score_grid(det, np.zeros((3, 12, 12), dtype=np.float32))


def test_layer_spec_validation():
    validate_layer_spec(DEFAULT_DETECTOR_SPEC)
    bad = [
        (),
        (((3, 4), 4, 2), ((4, 1), 1, 1)),        # even kernel
        (((3, 4), 3, 0), ((4, 1), 1, 1)),        # zero stride
        (((3, 4), 3, 2), ((5, 1), 1, 1)),        # broken channel chain
        (((4, 4), 3, 2), ((4, 1), 1, 1)),        # wrong input channels
        (((3, 4), 3, 2), ((4, 2), 1, 1)),        # wrong output channels
    ]
    for spec in bad:
        with pytest.raises(ConfigurationError):
            validate_layer_spec(spec)


def test_detector_spec_from_channels():
    assert detector_spec_from_channels((32, 64, 128, 64)) == DEFAULT_DETECTOR_SPEC
    with pytest.raises(ConfigurationError):
        detector_spec_from_channels((32, 64))


# ----------------------------------------------------------------- inpainter

@pytest.mark.parametrize("hw", [(16, 16), (56, 56), (33, 57), (8, 8)])
def test_inpainter_preserves_shape(hw):
    net = InpainterNet((4, 6))
    x = torch.rand(2, 3, *hw)
    out = net(x)
    assert out.shape == x.shape
    assert (out > 0).all() and (out < 1).all()


@pytest.mark.parametrize("widths", [(3,), (2, 3), (2, 3, 4)])
def test_inpainter_matches_reference(widths):
    net = _randomize(InpainterNet(widths), 11).double()
    x = np.random.default_rng(5).random((3, 10, 10))
    got = net(torch.from_numpy(x).unsqueeze(0)).squeeze(0).detach().numpy()
    want = _inpainter_ref(net, x)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_inpaint_wrapper():
    inp, _ = mini_pair(seed=2)
    x = np.random.default_rng(1).random((3, 16, 16), dtype=np.float32)
    y = inpaint(inp, x)
    assert y.shape == x.shape and y.dtype == np.float32
    with pytest.raises(ValueError, match="expects"):
        inpaint(inp, np.zeros((3, 8, 8), dtype=np.float32))
    with pytest.raises(ConfigurationError):
        InpainterNet(())
    with pytest.raises(ConfigurationError):
        InpainterNet((4, 0))


# ---------------------------------------------------- initialization factory

def test_init_deterministic_and_seed_sensitive(mini_arch):
    a_inp, a_det = init_models(mini_arch, seed=9)
    b_inp, b_det = init_models(mini_arch, seed=9)
    for a, b in ((a_inp, b_inp), (a_det, b_det)):
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)
    c_inp, _ = init_models(mini_arch, seed=10)
    assert not all(torch.equal(pa, pc) for pa, pc in
                   zip(a_inp.parameters(), c_inp.parameters()))


def test_init_distribution(mini_arch):
    arch = ArchConfig((140, 140))  # full widths: enough draws per tensor
    inp, det = init_models(arch, seed=0)
    for net in (inp, det):
        for name, p in net.named_parameters():
            if name.endswith("bias"):
                assert torch.equal(p, torch.zeros_like(p))
            else:
                fan_in = int(np.prod(p.shape[1:]))
                want = np.sqrt(2.0 / fan_in)
                if p.numel() >= 2000:
                    assert abs(p.std().item() - want) / want < 0.05
                assert abs(p.mean().item()) < 4 * want / np.sqrt(p.numel())


def _detector_param_count(spec):
    return sum(cin * cout * k * k + cout for (cin, cout), k, s in spec)


def _inpainter_param_count(widths, cin=3):
    total, prev = 0, cin
    for w in widths:
        total += prev * w * 9 + w
        prev = w
    c = widths[-1]
    for skip in reversed(widths[:-1]):
        total += (c + skip) * skip * 9 + skip
        c = skip
    total += (c + cin) * c * 9 + c   # head conv after input concat
    total += c * cin * 1 + cin       # 1x1 output conv
    return total


def test_parameter_counts_match_closed_form():
    det = PatchScorer()
    assert parameter_count(det) == _detector_param_count(DEFAULT_DETECTOR_SPEC)
    mini_det = PatchScorer(MINI_DETECTOR_SPEC)
    assert parameter_count(mini_det) == _detector_param_count(MINI_DETECTOR_SPEC)
    for widths in ((4,), MINI_WIDTHS, (8, 16, 32, 64), (64, 128, 256, 512)):
        assert parameter_count(InpainterNet(widths)) == _inpainter_param_count(widths)


def test_arch_config_validation():
    with pytest.raises(ConfigurationError):
        ArchConfig((0, 28))
    with pytest.raises(ConfigurationError):
        ArchConfig((28, 28), detector_spec=(((3, 4), 2, 2),))


# ---------------------------------------------------------------- checkpoint

def test_checkpoint_round_trip(tmp_path, mini_arch):
    inp, det = init_models(mini_arch, seed=31)
    path = tmp_path / "pair.ckpt"
    save_checkpoint(path, mini_arch, inpainter=inp, detector=det, step=123, seed=31)
    ck = load_checkpoint(path)
    assert ck.step == 123 and ck.seed == 31
    assert ck.arch == mini_arch
    for orig, loaded in ((inp, ck.inpainter), (det, ck.detector)):
        for a, b in zip(orig.state_dict().values(), loaded.state_dict().values()):
            assert torch.equal(a, b)


def test_checkpoint_single_network(tmp_path, mini_arch):
    inp, det = init_models(mini_arch, seed=1)
    save_checkpoint(tmp_path / "d.ckpt", mini_arch, detector=det, step=5, seed=1)
    ck = load_checkpoint(tmp_path / "d.ckpt")
    assert ck.inpainter is None and ck.detector is not None
    with pytest.raises(ValueError):
        save_checkpoint(tmp_path / "none.ckpt", mini_arch)


def test_checkpoint_bytes_deterministic(tmp_path, mini_arch):
    inp, det = init_models(mini_arch, seed=2)
    for name in ("a.ckpt", "b.ckpt"):
        save_checkpoint(tmp_path / name, mini_arch, inpainter=inp, detector=det,
                        step=9, seed=2)
    digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
    assert digest(tmp_path / "a.ckpt") == digest(tmp_path / "b.ckpt")


def test_checkpoint_errors(tmp_path, mini_arch):
    with pytest.raises(DataLoadError, match="nowhere.ckpt"):
        load_checkpoint(tmp_path / "nowhere.ckpt")
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a zip")
    with pytest.raises(DataLoadError, match="malformed"):
        load_checkpoint(bad)
    # wrong format tag
    import json
    import zipfile
    inp, det = init_models(mini_arch, seed=3)
    path = tmp_path / "tagged.ckpt"
    save_checkpoint(path, mini_arch, inpainter=inp, step=0, seed=3)
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
    manifest["format"] = "other-v9"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("manifest.json", json.dumps(manifest))
    with pytest.raises(DataLoadError, match="format"):
        load_checkpoint(path)
