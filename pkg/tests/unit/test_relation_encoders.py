"""
Unit tests for subset sampling and the biLSTM temporal-relation encoders.
"""

import itertools

import numpy as np
import pytest
import torch

from services.gesture_adaptation.engines.relation_encoders import (
    Modality,
    RelationEncoder,
    SamplingMode,
    active_scales,
    encode_all_scales,
    encode_planned,
    encode_relation,
    init_parameters,
    plan_batch,
    sample_scale_indices,
)
from services.gesture_adaptation.models.configs import EncoderConfig
from tests.fixtures.gradients import assert_gradients_match


def _encoder(input_dim: int = 2, hidden_dim: int = 3, seed: int = 0) -> RelationEncoder:
    encoder = RelationEncoder(input_dim, hidden_dim)
    init_parameters(encoder, seed)
    return encoder.double()


def _frames(length: int, width: int = 2, seed: int = 0) -> torch.Tensor:
    return torch.as_tensor(np.random.default_rng(seed).normal(size=(length, width)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _unrolled_lstm(sequence: np.ndarray, params: dict[str, np.ndarray], suffix: str) -> np.ndarray:
    w_ih, w_hh = params[f"lstm.weight_ih_l0{suffix}"], params[f"lstm.weight_hh_l0{suffix}"]
    bias = params[f"lstm.bias_ih_l0{suffix}"] + params[f"lstm.bias_hh_l0{suffix}"]
    hidden = w_hh.shape[1]
    h, c = np.zeros(hidden), np.zeros(hidden)
    for x in sequence:
        gates = w_ih @ x + w_hh @ h + bias
        i, f, g, o = (gates[k * hidden : (k + 1) * hidden] for k in range(4))
        c = _sigmoid(f) * c + _sigmoid(i) * np.tanh(g)
        h = _sigmoid(o) * np.tanh(c)
    return h


def test_full_length_scale_has_one_subset() -> None:
    for mode in SamplingMode:
        assert sample_scale_indices(5, 5, mode, seed=3) == [(0, 1, 2, 3, 4)]


def test_eval_subsets_are_evenly_spaced_and_repeatable() -> None:
    first = sample_scale_indices(6, 2, SamplingMode.EVAL)

    assert first == [(0, 3), (1, 4), (2, 5)]
    assert sample_scale_indices(6, 2, SamplingMode.EVAL, seed=99) == first


def test_train_subsets_are_valid_combinations() -> None:
    valid = set(itertools.combinations(range(8), 3))

    subsets = sample_scale_indices(8, 3, SamplingMode.TRAIN, seed=17)

    assert len(subsets) == 3
    assert len(set(subsets)) == 3
    assert all(subset in valid for subset in subsets)
    assert all(list(subset) == sorted(set(subset)) for subset in subsets)
    assert sample_scale_indices(8, 3, SamplingMode.TRAIN, seed=17) == subsets


def test_train_subsets_enumerate_small_spaces() -> None:
    assert sample_scale_indices(3, 2, SamplingMode.TRAIN, seed=0, k=5) == [(0, 1), (0, 2), (1, 2)]


def test_invalid_scales_rejected() -> None:
    with pytest.raises(ValueError, match="exceeds sequence length"):
        sample_scale_indices(4, 5)
    with pytest.raises(ValueError, match="at least 2"):
        sample_scale_indices(4, 1)


def test_zero_parameters_reach_the_fixed_point() -> None:
    """With all weights zero the cell state stays 0, so only the projection bias remains."""
    encoder = _encoder(input_dim=4, hidden_dim=3)
    with torch.no_grad():
        for parameter in encoder.parameters():
            parameter.zero_()
        encoder.projection.bias.copy_(torch.tensor([0.5, -1.0, 2.0]))

    feature = encode_relation(_frames(6, width=4), [(0, 2, 5), (1, 3, 4)], encoder)

    np.testing.assert_array_equal(feature.vector.detach().numpy(), [0.5, -1.0, 2.0])


def test_matches_hand_unrolled_recurrence() -> None:
    encoder = _encoder(input_dim=2, hidden_dim=3, seed=7)
    frames = _frames(4, width=2, seed=1)
    params = {name: value.detach().numpy() for name, value in encoder.named_parameters()}

    feature = encode_relation(frames, [(0, 2)], encoder)

    sequence = frames.numpy()[[0, 2]]
    forward = _unrolled_lstm(sequence, params, "")
    backward = _unrolled_lstm(sequence[::-1], params, "_reverse")
    expected = params["projection.weight"] @ np.concatenate([forward, backward]) + params["projection.bias"]
    np.testing.assert_allclose(feature.vector.detach().numpy(), expected, atol=1e-12)
    assert feature.scale == 2
    assert feature.modality is Modality.KINEMATIC


def test_temporal_order_matters() -> None:
    encoder = _encoder(input_dim=3, hidden_dim=4, seed=2)
    frames = _frames(3, width=3, seed=2)

    ordered = encoder(frames.unsqueeze(0))
    reversed_ = encoder(frames.flip(0).unsqueeze(0))

    assert not torch.allclose(ordered, reversed_)


def test_subset_features_are_averaged() -> None:
    encoder = _encoder(input_dim=2, hidden_dim=3, seed=4)
    frames = _frames(6, seed=4)
    subsets = [(0, 1, 2), (3, 4, 5)]

    feature = encode_relation(frames, subsets, encoder)

    separate = [encode_relation(frames, [subset], encoder).vector for subset in subsets]
    torch.testing.assert_close(feature.vector, (separate[0] + separate[1]) / 2, rtol=0, atol=1e-12)


def test_width_and_scale_mismatches_rejected() -> None:
    encoder = _encoder(input_dim=2)

    with pytest.raises(ValueError, match="encoder expects 2"):
        encode_relation(_frames(4, width=3), [(0, 1)], encoder, Modality.VISUAL)
    with pytest.raises(ValueError, match="share one scale"):
        encode_relation(_frames(4), [(0, 1), (0, 1, 2)], encoder)


@pytest.mark.parametrize("length, expected", [(4, [2, 3, 4]), (12, list(range(2, 11)))])
def test_scales_are_clipped_to_the_sequence(length: int, expected: list[int]) -> None:
    config = EncoderConfig(hidden_dim=5, max_scale=10, kinematic_dim=2)
    encoder = _encoder(input_dim=2, hidden_dim=5)

    features = encode_all_scales(_frames(length), config, encoder)

    assert sorted(features) == expected
    assert active_scales(length, config.max_scale) == expected
    assert all(feature.vector.shape == (5,) for feature in features.values())


def test_eval_encoding_is_deterministic() -> None:
    config = EncoderConfig(hidden_dim=4, max_scale=5, kinematic_dim=2)
    encoder = _encoder(input_dim=2, hidden_dim=4, seed=8)
    frames = _frames(9, seed=8)

    first = encode_all_scales(frames, config, encoder, seed=1)
    second = encode_all_scales(frames, config, encoder, seed=2)

    for scale in first:
        assert torch.equal(first[scale].vector, second[scale].vector)


def test_initialization_is_seeded() -> None:
    first, second, other = _encoder(seed=5), _encoder(seed=5), _encoder(seed=6)

    for (name, a), (_, b), (_, c) in zip(
        first.named_parameters(), second.named_parameters(), other.named_parameters()
    ):
        assert torch.equal(a, b), name
        assert not torch.equal(a, c), name


def test_batched_plan_matches_per_segment_encoding() -> None:
    config = EncoderConfig(hidden_dim=3, max_scale=4, subsets_per_scale=2, kinematic_dim=2)
    encoder = _encoder(input_dim=2, hidden_dim=3, seed=9)
    sequences = [_frames(length, seed=length) for length in (2, 5, 3)]

    plan = plan_batch([len(s) for s in sequences], config, SamplingMode.EVAL)
    features, masks = encode_planned(sequences, plan, encoder)

    assert sorted(plan) == [2, 3, 4]
    assert masks[4].tolist() == [False, True, False]
    assert masks[2].tolist() == [True, True, True]
    torch.testing.assert_close(features[4][0], torch.zeros(3, dtype=torch.float64))
    for position, sequence in enumerate(sequences):
        for scale, feature in encode_all_scales(sequence, config, encoder).items():
            torch.testing.assert_close(features[scale][position], feature.vector, rtol=0, atol=1e-12)


def test_gradients_match_finite_differences() -> None:
    encoder = _encoder(input_dim=3, hidden_dim=2, seed=12)
    frames = _frames(5, width=3, seed=12)
    subsets = [(0, 2, 4), (1, 2, 3)]

    def loss() -> torch.Tensor:
        return encode_relation(frames, subsets, encoder).vector.pow(2).sum()

    assert assert_gradients_match(loss, encoder.named_parameters()) > 0
