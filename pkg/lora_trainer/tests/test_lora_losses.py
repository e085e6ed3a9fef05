"""The margin ranking loss must agree with the shared fixture cases,
which pin the loss formula both scorer implementations train against."""

import json

import pytest
import torch

from lora_trainer import margin_ranking_loss, margin_ranking_loss_torch

from lora_helpers import SHARED_FIXTURES


def _cases():
    payload = json.loads((SHARED_FIXTURES / "hinge_cases.json").read_text())
    return payload["cases"]


class TestScalarLoss:
    def test_fixture_parity(self):
        cases = _cases()
        assert len(cases) >= 10
        for case in cases:
            got = margin_ranking_loss(case["f_pos"], case["f_neg"], case["margin"])
            assert got == pytest.approx(case["loss"], abs=1e-6), case

    def test_margin_must_be_positive(self):
        with pytest.raises(ValueError, match="margin"):
            margin_ranking_loss(0.5, 0.2, 0.0)
        with pytest.raises(ValueError, match="margin"):
            margin_ranking_loss(0.5, 0.2, -0.1)

    def test_satisfied_pair_has_zero_loss(self):
        assert margin_ranking_loss(1.0, 0.0, 0.1) == 0.0

    def test_loss_is_never_negative(self):
        for f_pos in (-1.0, 0.0, 0.3, 2.0):
            for f_neg in (-1.0, 0.0, 0.3, 2.0):
                assert margin_ranking_loss(f_pos, f_neg, 0.1) >= 0.0


class TestTensorLoss:
    def test_fixture_parity_elementwise(self):
        for case in _cases():
            got = margin_ranking_loss_torch(
                torch.tensor([case["f_pos"]]),
                torch.tensor([case["f_neg"]]),
                case["margin"],
            )
            assert float(got) == pytest.approx(case["loss"], abs=1e-6), case

    def test_batch_mean_matches_scalar_mean(self):
        cases = [c for c in _cases() if c["margin"] == 0.1]
        good = torch.tensor([c["f_pos"] for c in cases])
        bad = torch.tensor([c["f_neg"] for c in cases])
        expected = sum(c["loss"] for c in cases) / len(cases)
        got = margin_ranking_loss_torch(good, bad, 0.1)
        assert float(got) == pytest.approx(expected, abs=1e-6)

    def test_margin_must_be_positive(self):
        with pytest.raises(ValueError, match="margin"):
            margin_ranking_loss_torch(torch.zeros(2), torch.zeros(2), 0.0)

    def test_gradient_flows_only_through_active_pairs(self):
        good = torch.tensor([1.0, 0.0], requires_grad=True)
        bad = torch.tensor([0.0, 0.0])
        loss = margin_ranking_loss_torch(good, bad, 0.1)
        loss.backward()
        assert good.grad[0] == 0.0  # satisfied pair: flat region
        assert good.grad[1] != 0.0  # violated pair: active gradient
