
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from sgac.backend import BackendError, ContractViolation
from sgac.data import Problem
from sgac.grpo import (
    BurstAborted,
    BurstConfig,
    BurstReport,
    LossPattern,
    classify_loss_pattern,
    group_advantages,
    micro_burst,
)
from sgac.sim import SimBackend, SimPolicyState

REWARD_VALUES = [0.0, 0.5, 1.0, 1.5]


def test_advantage_example():
    g = group_advantages([1.5, 0.5, 0.5, 0.5], 1e-4)
    assert g.mean == 0.75 and g.std == pytest.approx(0.4330127, abs=1e-7)
    assert g.advantages == pytest.approx([1.7316, -0.5772, -0.5772, -0.5772], abs=1e-4)


def test_degenerate_group_exact_zero():
    assert group_advantages([0.5] * 4).advantages == (0.0,) * 4
    assert group_advantages([0.1] * 7).advantages == (0.0,) * 7


def test_two_point():
    assert group_advantages([1, 0], 1e-12).advantages == pytest.approx([1, -1])


def test_rejects():
    with pytest.raises(ContractViolation):
        group_advantages([1.0])
    with pytest.raises(ContractViolation):
        group_advantages([1.0, 0.0], 0.0)


rewards_st = st.lists(st.sampled_from(REWARD_VALUES), min_size=2, max_size=16)


@given(rewards_st)
def test_advantage_moments(rs):
    g = group_advantages(rs)
    a = np.array(g.advantages)
    assert abs(a.mean()) < 1e-9
    if g.std >= 0.1:
        assert abs(a.std() - g.std / (g.std + g.epsilon)) < 1e-6
    assert all(x == (r - g.mean) / (g.std + g.epsilon) for x, r in zip(g.advantages, rs))


@given(rewards_st, st.floats(-5, 5))
def test_shift_invariance(rs, c):
    a = group_advantages(rs).advantages
    b = group_advantages([r + c for r in rs]).advantages
    assert np.allclose(a, b, atol=1e-9)


@given(rewards_st, st.floats(0.1, 10))
def test_scale_keeps_argmax(rs, c):
    assume(len(set(rs)) > 1)
    a = group_advantages(rs).advantages
    b = group_advantages([r * c for r in rs]).advantages
    assert int(np.argmax(a)) == int(np.argmax(b))
    assert np.allclose(a, group_advantages([r * c for r in rs], 1e-4 * c).advantages, atol=1e-9)


@pytest.mark.parametrize(
    "losses,pattern",
    [
        ([-0.203, -0.086, -0.203, 0.027, 0.125], LossPattern.ACTIVE),
        ([0, 0, 0, 0, 0], LossPattern.ZERO),
        ([0, 0.1, 0, -0.05, 0], LossPattern.TRANSITION),
    ],
)
def test_loss_patterns(losses, pattern):
    assert classify_loss_pattern(losses) is pattern


def test_burst_config_validation():
    with pytest.raises(ContractViolation):
        BurstConfig(max_steps=0)
    with pytest.raises(ContractViolation):
        BurstConfig(group_size=1)


def sim_backend(skill=0.0, fmt=1.0):
    concepts = ("Algebra", "Geometry")
    state = SimPolicyState({c: skill for c in concepts}, fmt, concepts, [[1.0, 0.2], [0.2, 1.0]])
    return SimBackend(state, 0.1)


def test_zero_burst_when_problem_is_trivial():
    backend = sim_backend(skill=60.0)
    before = dict(backend.state.skill)
    report = micro_burst(backend, Problem("p", "s", "5", 1), BurstConfig())
    assert report.pattern is LossPattern.ZERO and report.step_losses == [0.0] * 5
    assert backend.state.skill == before
    for step in report.steps:
        assert len(set(step.rewards)) == 1 and step.advantages == [0.0] * 4


def test_mixed_burst_is_active_and_records_steps():
    backend = sim_backend(skill=0.0)
    events = []
    report = micro_burst(backend, Problem("p", "s", "5", 3), BurstConfig(), seed=11, on_step=lambda s, r: events.append(s.step))
    assert len(report.step_losses) == 5 and report.rollout_counts == [4] * 5 and events == [0, 1, 2, 3, 4]
    for step, loss in zip(report.steps, report.step_losses):
        if len(set(step.rewards)) == 1:
            assert loss == 0.0
    assert BurstReport.from_json(report.to_json()) == report
    assert any(loss != 0 for loss in report.step_losses)


def test_burst_deterministic():
    a = micro_burst(sim_backend(), Problem("p", "s", "5", 3), BurstConfig(), seed=4)
    b = micro_burst(sim_backend(), Problem("p", "s", "5", 3), BurstConfig(), seed=4)
    assert a == b


class FlakyBackend:
    def __init__(self, inner, fail_at):
        self.inner, self.fail_at, self.calls = inner, fail_at, 0

    def generate(self, *args):
        return self.inner.generate(*args)

    def generate_greedy(self, *args):
        return self.inner.generate_greedy(*args)

    def apply_update(self, *args):
        self.calls += 1
        if self.calls > self.fail_at:
            raise BackendError("boom")
        return self.inner.apply_update(*args)


def test_burst_abort_carries_partial_report():
    with pytest.raises(BurstAborted) as info:
        micro_burst(FlakyBackend(sim_backend(), 2), Problem("p", "s", "5", 3), BurstConfig())
    assert len(info.value.report.step_losses) == 2
