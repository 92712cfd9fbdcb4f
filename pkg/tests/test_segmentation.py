import itertools

import pytest
import torch
import torch.nn.functional as F

from compile_imitation.constants import ILLEGAL_LOGIT
from compile_imitation.models.config import SampleMode
from compile_imitation.models.segmentation import (
    boundary_slot_logits,
    gumbel_softmax,
    legal_slots,
    readout_z,
    sample_boundary,
    segment_probs_and_masks,
    support_gumbel,
)


def test_one_hot_boundary_splits_segments():
    y = torch.tensor([[[0.0, 1.0, 0.0, 0.0]]])
    seg = segment_probs_and_masks(y, 3)
    assert seg.segprobs[0].tolist() == [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]
    assert seg.masks[0, 1].tolist() == [0.0, 1.0, 1.0]
    assert seg.masks[0, 0].tolist() == [1.0, 1.0, 1.0]


def test_soft_boundary_shares_the_middle_step():
    y = torch.tensor([[[0.0, 0.5, 0.5]]])
    seg = segment_probs_and_masks(y, 3)
    assert seg.segprobs[0].tolist() == pytest.approx([[1.0, 0.5, 0.0], [0.0, 0.5, 1.0]])


def test_sequence_of_samples_is_stacked():
    ys = [torch.tensor([0.0, 1.0, 0.0, 0.0]), torch.tensor([0.0, 0.0, 1.0, 0.0])]
    seg = segment_probs_and_masks(ys, 3)
    assert seg.segprobs.tolist() == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def test_column_sums_are_one():
    gen = torch.Generator().manual_seed(0)
    for _ in range(50):
        T = int(torch.randint(1, 12, (1,), generator=gen))
        M = int(torch.randint(1, 5, (1,), generator=gen))
        y = torch.softmax(torch.randn(200, M - 1, T + 1, generator=gen, dtype=torch.float64) * 3, dim=-1)
        seg = segment_probs_and_masks(y, T)
        assert torch.allclose(seg.segprobs.sum(dim=-2), torch.ones(200, T, dtype=torch.float64))
        assert (seg.segprobs >= 0).all()


def test_segment_masks_are_monotone():
    y = torch.softmax(torch.randn(64, 3, 9, dtype=torch.float64), dim=-1)
    seg = segment_probs_and_masks(y, 8)
    assert (seg.masks[:, 1:] <= seg.masks[:, :-1] + 1e-12).all()
    assert (seg.masks[:, :, 1:] >= seg.masks[:, :, :-1] - 1e-12).all()


@pytest.mark.parametrize("M", [1, 2, 3])
@pytest.mark.parametrize("T", range(1, 9))
def test_hard_boundaries_match_discrete_segments(T, M):
    for b in itertools.combinations_with_replacement(range(2, T + 2), M - 1):
        y = F.one_hot(torch.tensor(b, dtype=torch.long) - 1, T + 1).double()
        seg = segment_probs_and_masks(y, T)
        edges = (1,) + b + (T + 1,)
        expected = [[1.0 if edges[i] <= t < edges[i + 1] else 0.0 for t in range(1, T + 1)] for i in range(M)]
        assert seg.segprobs.tolist() == expected, b


def test_padded_steps_are_zeroed():
    y = torch.tensor([[[0.0, 0.0, 1.0, 0.0, 0.0]]])
    valid = torch.tensor([[1.0, 1.0, 1.0, 0.0]])
    seg = segment_probs_and_masks(y, 4, valid)
    assert seg.segprobs[0, :, 3].tolist() == [0.0, 0.0]


def test_legal_slots_exclude_first_and_padding():
    legal = legal_slots(torch.tensor([3, 5]), 5)
    assert legal.tolist() == [
        [False, True, True, True, False, False],
        [False, True, True, True, True, True],
    ]


def test_slot_logits_mask_illegal_positions():
    step_logits = torch.tensor([[0.1, 0.2, 0.3, 0.4]])
    logits = boundary_slot_logits(step_logits, legal_slots(torch.tensor([3]), 4))
    assert logits[0, 0] == ILLEGAL_LOGIT and logits[0, 4] == ILLEGAL_LOGIT
    assert logits[0, 1:4].tolist() == pytest.approx([0.1, 0.2, 0.3])


def test_sample_boundary_never_picks_illegal_slots():
    gen = torch.Generator().manual_seed(1)
    legal = legal_slots(torch.tensor([2, 4]), 4)
    logits = torch.zeros(2, 5)
    logits[:, 0] = 50.0
    for _ in range(100):
        y = sample_boundary(logits, legal, 1.0, SampleMode.HARD, gen)
        assert (y[~legal] == 0).all()


def test_sample_boundary_without_legal_slots_raises():
    with pytest.raises(ValueError):
        sample_boundary(torch.zeros(1, 3), torch.zeros(1, 3, dtype=torch.bool), 1.0)


def test_argmax_mode_is_exact_one_hot():
    logits = torch.tensor([[0.3, 2.0, -1.0], [1.0, 1.0, 0.0]])
    sample = gumbel_softmax(logits, 1e-3, SampleMode.ARGMAX)
    assert sample.tolist() == [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]


def test_probs_mode_is_softmax():
    logits = torch.tensor([0.3, 2.0, -1.0])
    assert torch.allclose(gumbel_softmax(logits, 0.5, SampleMode.PROBS), torch.softmax(logits, -1))


def test_relaxed_samples_lie_on_simplex():
    gen = torch.Generator().manual_seed(2)
    sample = gumbel_softmax(torch.randn(100, 6), 0.7, SampleMode.RELAXED, gen)
    assert torch.allclose(sample.sum(-1), torch.ones(100))
    assert (sample > 0).all()


def test_relaxed_samples_sharpen_as_temperature_drops():
    logits = torch.randn(500, 4, generator=torch.Generator().manual_seed(3))
    warm = gumbel_softmax(logits, 2.0, generator=torch.Generator().manual_seed(4)).max(-1).values.mean()
    cold = gumbel_softmax(logits, 0.05, generator=torch.Generator().manual_seed(4)).max(-1).values.mean()
    assert cold > warm
    assert cold > 0.9


def test_hard_samples_follow_softmax_frequencies():
    gen = torch.Generator().manual_seed(5)
    logits = torch.tensor([0.0, 1.0, -0.5, 0.5]).expand(20000, 4)
    freq = gumbel_softmax(logits, 1.0, SampleMode.HARD, gen).mean(0)
    assert torch.allclose(freq, torch.softmax(logits[0], -1), atol=0.015)


def test_seeded_generator_reproduces_samples():
    logits = torch.randn(4, 5)
    a = gumbel_softmax(logits, 1.0, generator=torch.Generator().manual_seed(9))
    b = gumbel_softmax(logits, 1.0, generator=torch.Generator().manual_seed(9))
    assert torch.equal(a, b)


def test_last_step_readout_selects_closing_step():
    h_z = torch.randn(1, 4, 3)
    y = torch.zeros(1, 5)
    y[0, 3] = 1.0
    params, _ = readout_z(h_z, y, 1.0, SampleMode.ARGMAX)
    assert torch.equal(params, h_z[:, 2])


def test_argmax_readout_gives_one_hot_code():
    h_z = torch.tensor([[[0.0, 5.0, 1.0], [2.0, 0.0, 1.0]]])
    y = torch.tensor([[0.0, 0.0, 1.0]])
    _, z = readout_z(h_z, y, 1.0, SampleMode.ARGMAX)
    assert z.tolist() == [[1.0, 0.0, 0.0]]


def test_attentive_readout_with_single_step_segment():
    h_z = torch.randn(1, 4, 3)
    segprobs = torch.tensor([[0.0, 1.0, 0.0, 0.0]])
    scores = torch.randn(1, 4)
    params, _ = readout_z(h_z, torch.zeros(1, 5), 1.0, SampleMode.ARGMAX, scores=scores, segprobs=segprobs)
    assert torch.allclose(params, h_z[:, 1])


def test_gaussian_readout_uses_mean_without_noise():
    h_z = torch.randn(1, 3, 4)
    y = torch.tensor([[0.0, 1.0, 0.0, 0.0]])
    params, z = readout_z(h_z, y, 1.0, SampleMode.PROBS, gaussian=True)
    assert torch.equal(z, params[:, :2])
    _, noisy = readout_z(h_z, y, 1.0, SampleMode.RELAXED, gaussian=True, generator=torch.Generator().manual_seed(0))
    assert noisy.shape == (1, 2)
    assert not torch.equal(noisy, z)


def test_boundary_noise_ignores_padding_width():
    logits = torch.randn(2, 6, dtype=torch.float64)
    lengths = torch.tensor([3, 5])
    narrow = sample_boundary(logits, legal_slots(lengths, 5), 0.7, SampleMode.RELAXED, torch.Generator().manual_seed(5))
    wide_logits = torch.cat([logits, torch.zeros(2, 4, dtype=torch.float64)], dim=-1)
    wide = sample_boundary(wide_logits, legal_slots(lengths, 9), 0.7, SampleMode.RELAXED, torch.Generator().manual_seed(5))
    assert torch.allclose(wide[:, :6], narrow, atol=1e-12)
    assert (wide[:, 6:] == 0).all()


def test_support_noise_is_zero_off_support():
    support = legal_slots(torch.tensor([2, 4]), 4)
    noise = support_gumbel(support, torch.Generator().manual_seed(0), torch.float64)
    assert (noise[~support] == 0).all()
    assert (noise[support] != 0).all()
