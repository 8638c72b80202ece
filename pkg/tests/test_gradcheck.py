"""Self-test harness that compares backprop to finite differences."""

from priorvqa.gradcheck import DEFAULT_TOLERANCE, TINY_CONFIG, run_gradcheck


class TestRunGradcheck:
    def test_two_seeds_pass(self):
        result = run_gradcheck(seeds=2)
        assert result.passed
        assert result.max_rel_err < DEFAULT_TOLERANCE
        assert result.seeds == 2
        assert result.parameters_checked > 0
        assert result.elapsed_seconds > 0.0
        assert result.worst_tensor

    def test_impossible_tolerance_fails(self):
        result = run_gradcheck(seeds=1, tolerance=0.0)
        assert not result.passed

    def test_tiny_config_is_small(self):
        # keep the self-test fast: the bundled config must stay well under
        # ten thousand parameters
        from priorvqa.model import init_model

        assert init_model(TINY_CONFIG).total_parameter_count() < 10_000
