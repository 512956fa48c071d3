import numpy as np
import pytest

from freshreplay import CliffWalking, EpisodeDoneError, FrozenLake, make_env
from freshreplay.envs import DOWN, LEFT, RIGHT, UP


class FixedDraw:
    """rng stub: integers() always returns a fixed value (0 = no slip)."""

    def __init__(self, value=0):
        self.value = value

    def integers(self, lo, hi):
        return self.value


class TestCliffWalking:
    def test_reset_position_and_shape(self):
        env = CliffWalking()
        state = env.reset(seed=0)
        assert (env.n_rows, env.n_cols) == (4, 12)
        assert state == 3 * 12 + 0  # bottom-left start

    def test_step_onto_cliff_resets_without_done(self):
        env = CliffWalking()
        env.reset(seed=0)
        outcome = env.step(RIGHT)  # (3,0) -> cliff cell (3,1)
        assert outcome.reward == -100.0
        assert outcome.next_state == 3 * 12 + 0  # teleported back to start
        assert outcome.done is False
        assert env.state().steps_taken == 1  # the reset consumed a turn

    def test_optimal_path_scores_zero(self):
        env = CliffWalking()
        env.reset(seed=0)
        total = 0.0
        for action in [UP] + [RIGHT] * 11 + [DOWN]:
            outcome = env.step(action)
            total += outcome.reward
        assert total == 0.0
        assert outcome.done is True
        assert outcome.next_state == 3 * 12 + 11

    def test_walls_clamp(self):
        env = CliffWalking()
        env.reset(seed=0)
        outcome = env.step(LEFT)  # off-grid: stay at start
        assert outcome.next_state == 3 * 12 + 0
        assert outcome.reward == 0.0

    def test_horizon_truncates(self):
        env = CliffWalking()
        env.reset(seed=0)
        done = False
        steps = 0
        while not done:
            done = env.step(UP if steps % 2 == 0 else DOWN).done
            steps += 1
        assert steps == 200

    def test_step_after_done_raises(self):
        env = CliffWalking()
        env.reset(seed=0)
        for action in [UP] + [RIGHT] * 11 + [DOWN]:
            env.step(action)
        with pytest.raises(EpisodeDoneError):
            env.step(UP)

    def test_returns_nonpositive_random_policy(self):
        env = CliffWalking()
        rng = np.random.default_rng(1)
        for episode in range(20):
            env.reset(seed=episode)
            total, done = 0.0, False
            while not done:
                outcome = env.step(int(rng.integers(4)))
                total += outcome.reward
                done = outcome.done
            assert total <= 0.0


class TestFrozenLake:
    def test_reset_position_and_shape(self):
        env = FrozenLake()
        state = env.reset(seed=0)
        assert (env.n_rows, env.n_cols) == (4, 4)
        assert state == 0

    def test_forced_move_to_goal(self):
        env = FrozenLake()
        env.reset(seed=0)
        env._pos = (3, 2)  # adjacent to the goal
        outcome = env.step(RIGHT, rng=FixedDraw(0))
        assert outcome.reward == 1.0
        assert outcome.done is True
        assert outcome.next_state == 15

    def test_hole_terminates_with_zero_reward(self):
        env = FrozenLake()
        env.reset(seed=0)
        env._pos = (0, 1)
        outcome = env.step(DOWN, rng=FixedDraw(0))  # into hole (1,1)
        assert outcome.reward == 0.0
        assert outcome.done is True

    def test_slip_directions(self):
        env = FrozenLake()
        env.reset(seed=0)
        # action UP from (2,1): intended (1,1), slips (2,0) and (2,2)
        results = {}
        for k in range(3):
            env._pos = (2, 1)
            env._done = False
            env._steps = 0
            out = env.step(UP, rng=FixedDraw(k))
            results[k] = out.next_state
        assert results[0] == 1 * 4 + 1
        assert results[1] == 2 * 4 + 0
        assert results[2] == 2 * 4 + 2

    def test_slip_frequencies(self):
        # full-scale (10^6-step, +-0.002) version lives in the acceptance suite
        env = FrozenLake()
        env.reset(seed=123)
        counts = {5: 0, 8: 0, 10: 0}  # intended up, slip left, slip right
        n = 200_000
        for _ in range(n):
            env._pos = (2, 1)
            env._done = False
            env._steps = 0
            out = env.step(UP)
            counts[out.next_state] += 1
        for state, c in counts.items():
            assert abs(c / n - 1.0 / 3.0) < 0.004, (state, c / n)

    def test_horizon_is_ten(self):
        env = FrozenLake()
        env.reset(seed=5)
        steps, done = 0, False
        while not done:
            done = env.step(UP, rng=FixedDraw(1)).done  # slides left forever
            steps += 1
        assert steps == 10

    def test_binary_returns(self):
        env = FrozenLake()
        rng = np.random.default_rng(3)
        for episode in range(300):
            env.reset(seed=episode)
            total, done = 0.0, False
            while not done:
                outcome = env.step(int(rng.integers(4)))
                total += outcome.reward
                done = outcome.done
            assert total in (0.0, 1.0)


class TestDeterminism:
    @pytest.mark.parametrize("name", ["cliffwalking", "frozenlake"])
    def test_same_seed_same_episode(self, name):
        actions = np.random.default_rng(7).integers(0, 4, size=50)

        def play():
            env = make_env(name)
            env.reset(seed=99)
            trace = []
            for a in actions:
                outcome = env.step(int(a))
                trace.append((outcome.next_state, outcome.reward, outcome.done))
                if outcome.done:
                    env.reset()
            return trace

        assert play() == play()

    def test_make_env_unknown(self):
        with pytest.raises(ValueError, match="unknown environment"):
            make_env("sokoban")
