import numpy as np
import torch

from compile_imitation.data.dataset import Batch
from compile_imitation.models.compile_model import CompILEModel
from compile_imitation.training.elbo import elbo_loss
from conftest import make_config

EPS = 1e-6


def tiny_batch():
    rng = np.random.default_rng(0)
    lengths = np.array([6, 4])
    pad_mask = np.arange(6)[None, :] >= lengths[:, None]
    states = rng.normal(size=(2, 6, 32))
    states[pad_mask] = 0.0
    actions = rng.integers(0, 25, size=(2, 6))
    actions[pad_mask] = 0
    return Batch("reacher", states, actions, lengths, pad_mask)


def loss_at(model, batch):
    return elbo_loss(batch, model, generator=torch.Generator().manual_seed(0), temperature=1.0).total


def test_analytic_gradients_match_finite_differences():
    torch.manual_seed(0)
    model = CompILEModel(make_config(env="reacher", obs_shape=(32,), num_latents=3, hidden=8)).double()
    batch = tiny_batch()
    model.zero_grad()
    loss_at(model, batch).backward()
    grads = {name: p.grad.detach().clone() for name, p in model.named_parameters() if p.grad is not None}

    gen = torch.Generator().manual_seed(1)
    worst = 0.0
    with torch.no_grad():
        for name, param in model.named_parameters():
            if name not in grads:
                continue
            direction = torch.randn(param.shape, generator=gen, dtype=param.dtype)
            analytic = float((grads[name] * direction).sum())
            param.add_(EPS * direction)
            up = float(loss_at(model, batch))
            param.sub_(2 * EPS * direction)
            down = float(loss_at(model, batch))
            param.add_(EPS * direction)
            numeric = (up - down) / (2 * EPS)
            err = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-5)
            worst = max(worst, err)
            assert err < 1e-4, f"{name}: analytic {analytic:.6g} vs numeric {numeric:.6g}"
    assert worst < 1e-4
    assert len(grads) > 10
