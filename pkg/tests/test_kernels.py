import math
import os
import subprocess
import sys

import numpy as np
import pytest

from freshreplay import PriorityConfig, PrioritySignal, ReplayBuffer, Step, Trajectory
from freshreplay._kernels import available_backends, get_backend


def requires_both():
    if len(available_backends()) < 2:
        pytest.skip("compiled backend not built")


def test_backend_selection_reports_name():
    from freshreplay import KERNEL_BACKEND

    assert KERNEL_BACKEND in ("compiled", "python")


def test_get_backend_rejects_unknown():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_decay_compute_backends_agree():
    requires_both()
    rng = np.random.default_rng(0)
    n = 10_000
    bases = rng.uniform(0.01, 10.0, n)
    ages = rng.integers(0, 5000, n).astype(np.float64)
    outs = []
    for name in available_backends():
        kern = get_backend(name)
        decays = np.empty(n)
        eff = np.empty(n)
        leaves = np.empty(n)
        kern.decay_compute(bases, ages, 500.0, 0.6, decays, eff, leaves)
        outs.append((decays, eff, leaves))
    for a, b in zip(outs[0], outs[1]):
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_decay_compute_tau_inf_is_identity():
    for name in available_backends():
        kern = get_backend(name)
        bases = np.array([1.5, 0.01, 900.0])
        ages = np.array([0.0, 1e6, 3.0])
        decays = np.empty(3)
        eff = np.empty(3)
        leaves = np.empty(3)
        kern.decay_compute(bases, ages, math.inf, 0.6, decays, eff, leaves)
        assert np.all(decays == 1.0)
        assert np.array_equal(eff, bases)


def test_decay_floor_keeps_leaves_positive():
    for name in available_backends():
        kern = get_backend(name)
        bases = np.array([2.0])
        ages = np.array([1e9])
        decays = np.empty(1)
        eff = np.empty(1)
        leaves = np.empty(1)
        kern.decay_compute(bases, ages, 1.0, 0.6, decays, eff, leaves)
        assert decays[0] == 1e-300
        assert eff[0] > 0.0
        assert leaves[0] > 0.0


def _buffer_workload(backend_name):
    buf = ReplayBuffer(
        capacity=64,
        priority=PriorityConfig(tau=100.0),
        rng=np.random.default_rng(42),
        backend=get_backend(backend_name),
    )
    rng = np.random.default_rng(1)
    for step in range(200):
        r = float(rng.uniform(-3.0, 3.0))
        traj = Trajectory.from_steps([Step(0, 0, r, 0.0, 0, True)], step)
        buf.insert(traj, PrioritySignal(reward=r), step)
        if step % 5 == 0:
            buf.refresh_priorities(step)
        if step > 10 and step % 3 == 0:
            buf.sample_stratified(8, beta=0.4)
    return buf.dump_snapshot()


def test_buffer_workload_backend_parity():
    # same seeds, same call sequence: snapshots agree to float tolerance
    requires_both()
    dumps = [_buffer_workload(name) for name in available_backends()]
    a_lines, b_lines = dumps[0].splitlines(), dumps[1].splitlines()
    assert len(a_lines) == len(b_lines)
    for la, lb in zip(a_lines, b_lines):
        ia, sa, ba, ea = la.split()
        ib, sb, bb, eb = lb.split()
        assert (ia, sa) == (ib, sb)
        assert float(ba) == pytest.approx(float(bb), rel=1e-12)
        assert float(ea) == pytest.approx(float(eb), rel=1e-12)


def test_forced_python_backend_in_subprocess():
    env = dict(os.environ, FRESHREPLAY_KERNELS="python")
    result = subprocess.run(
        [sys.executable, "-c", "import freshreplay; print(freshreplay.KERNEL_BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert result.returncode == 0, result.stderr
    assert result.stdout.strip() == "python"


def test_threaded_refresh_matches_sequential():
    def run(threads):
        env_val = os.environ.pop("FRESHREPLAY_THREADS", None)
        os.environ["FRESHREPLAY_THREADS"] = str(threads)
        try:
            buf = ReplayBuffer(capacity=20_000, priority=PriorityConfig(tau=50.0))
            rng = np.random.default_rng(3)
            rewards = rng.uniform(-4.0, 4.0, 20_000)
            for i, r in enumerate(rewards):
                traj = Trajectory.from_steps([Step(0, 0, float(r), 0.0, 0, True)], i)
                buf.insert(traj, PrioritySignal(reward=float(r)), i)
            buf.refresh_priorities(25_000)
            return buf._effectives.copy(), buf.total_transformed()
        finally:
            if env_val is None:
                os.environ.pop("FRESHREPLAY_THREADS", None)
            else:
                os.environ["FRESHREPLAY_THREADS"] = env_val

    seq_eff, seq_total = run(1)
    par_eff, par_total = run(4)
    assert np.array_equal(seq_eff, par_eff)
    assert seq_total == par_total
