import numpy as np
import pytest

from tuberank.errors import ConfigError
from tuberank.minimizer import (
    MinimizerConfig,
    SimilarityMatrix,
    exhaustive_minimize,
    greedy_minimize,
    pairwise_similarity,
    query_energy,
)

from conftest import make_tube
from oracles import energy_oracle, exhaustive_oracle


def sim_from(values):
    return SimilarityMatrix(np.asarray(values, dtype=np.float64))


def uniform_sim(m, off_diagonal):
    v = np.full((m, m), float(off_diagonal))
    np.fill_diagonal(v, 1.0)
    return SimilarityMatrix(v)


def random_sim(rng, m):
    vectors = rng.normal(size=(m, 6))
    tube = make_tube("t", list(vectors), channel="pose")
    return pairwise_similarity(tube, "pose")


class TestPairwiseSimilarity:
    def test_identical_embeddings_give_ones(self):
        tube = make_tube("t", [[1.0, 2.0]] * 4, channel="pose")
        sim = pairwise_similarity(tube, "pose")
        assert np.all(sim.values == 1.0)

    def test_orthogonal_gives_half(self):
        tube = make_tube("t", [[1.0, 0.0], [0.0, 1.0]], channel="pose")
        sim = pairwise_similarity(tube, "pose")
        assert sim.values[0, 1] == 0.5

    def test_opposite_gives_zero(self):
        tube = make_tube("t", [[1.0, 0.0], [-1.0, 0.0]], channel="pose")
        sim = pairwise_similarity(tube, "pose")
        assert sim.values[0, 1] == 0.0

    def test_zero_norm_names_frame(self):
        tube = make_tube("t", [[1.0, 0.0], [0.0, 0.0]], channel="pose")
        with pytest.raises(ValueError, match="frame 1"):
            pairwise_similarity(tube, "pose")

    def test_matrix_invariants_on_random_tubes(self, rng):
        for _ in range(20):
            sim = random_sim(rng, int(rng.integers(1, 12)))
            v = sim.values
            assert np.array_equal(v, v.T)
            assert np.all(np.diag(v) == 1.0)
            assert v.min() >= 0.0 and v.max() <= 1.0

    def test_falls_back_to_retrieval(self):
        tube = make_tube("t", [[1.0, 0.0], [0.0, 1.0]], channel="retrieval")
        sim = pairwise_similarity(tube, "pose")
        assert sim.values[0, 1] == 0.5


class TestGreedyMinimize:
    def test_nothing_novel_selects_anchor_only(self):
        mq = greedy_minimize(uniform_sim(5, 1.0), MinimizerConfig(phi=0.7))
        assert mq.selected == [0]
        assert mq.excluded == [1, 2, 3, 4]

    def test_everything_novel_selects_all(self):
        mq = greedy_minimize(uniform_sim(5, 0.0), MinimizerConfig(phi=0.4))
        assert mq.selected == [0, 1, 2, 3, 4]

    def test_block_matrix_hand_trace(self):
        # blocks {0,1} and {2,3} at 0.9 inside, 0.1 across: the scan keeps
        # one representative per block.
        values = [
            [1.0, 0.9, 0.1, 0.1],
            [0.9, 1.0, 0.1, 0.1],
            [0.1, 0.1, 1.0, 0.9],
            [0.1, 0.1, 0.9, 1.0],
        ]
        mq = greedy_minimize(sim_from(values), MinimizerConfig(phi=0.4))
        assert mq.selected == [0, 2]
        assert mq.excluded == [1, 3]

    def test_coverage_property(self, rng):
        # every excluded frame is phi-covered by some selected frame
        for _ in range(50):
            sim = random_sim(rng, int(rng.integers(2, 15)))
            phi = float(rng.uniform(0.05, 0.95))
            mq = greedy_minimize(sim, MinimizerConfig(phi=phi))
            for j in mq.excluded:
                assert sim.values[mq.selected, j].max() >= phi

    def test_phi_monotonicity_on_filtered_tubes(self):
        # Holds on tubes as the pipeline feeds them to the minimizer, i.e.
        # after noise filtering. Unfiltered junk frames (or adversarial
        # matrices) can break it: a frame selected only at higher phi may
        # cover several frames a lower phi kept separately.
        from tuberank.noise_filter import FilterConfig, filter_tube
        from tuberank.synth import SynthConfig, generate_synthetic

        grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        tubes = []
        seed = 0
        while len(tubes) < 40:
            cfg = SynthConfig(seed=4000 + seed, n_identities=2, n_cameras=2,
                              frames_per_tube_range=(5, 30), noise_frame_rate=0.1,
                              appearance_noise_sigma=0.35, camera_offset_sigma=0.5)
            _, probes = generate_synthetic(cfg)
            tubes.extend(probes)
            seed += 1
        for tube in tubes[:40]:
            kept, _ = filter_tube(tube, FilterConfig())
            sim = pairwise_similarity(kept, "pose")
            sizes = [len(greedy_minimize(sim, MinimizerConfig(phi=p)).selected) for p in grid]
            assert all(b >= a for a, b in zip(sizes, sizes[1:]))

    def test_invalid_phi(self):
        with pytest.raises(ConfigError):
            greedy_minimize(uniform_sim(3, 0.5), MinimizerConfig(phi=1.5))


class TestQueryEnergy:
    def test_all_selected_has_no_coverage_term(self):
        cfg = MinimizerConfig(phi=0.4)
        e = query_energy(uniform_sim(4, 0.3), [0, 1, 2, 3], cfg)
        assert e.gamma_sum == 0.0
        assert e.total == pytest.approx(0.4 * e.xi_sum, abs=1e-15)

    def test_singleton_selection_direct_substitution(self):
        e = query_energy(uniform_sim(3, 0.5), [0], MinimizerConfig(phi=0.4))
        assert e.xi_sum == 0.0
        assert e.gamma_sum == 1.0
        assert e.total == 1.0

    def test_pair_selection_verified_against_oracle(self):
        sim = uniform_sim(3, 0.5)
        cfg = MinimizerConfig(phi=0.4)
        e = query_energy(sim, [0, 1], cfg)
        assert e.xi_sum == pytest.approx(1.0, abs=1e-15)
        assert e.gamma_sum == pytest.approx(0.5, abs=1e-15)
        assert e.total == pytest.approx(0.9, abs=1e-15)
        oracle = energy_oracle(sim.values.tolist(), [0, 1], 0.4)
        assert e.total == pytest.approx(oracle[2], abs=1e-12)

    def test_oracle_agreement_in_bulk(self, rng):
        for _ in range(300):
            m = int(rng.integers(1, 14))
            sim = random_sim(rng, m)
            size = int(rng.integers(1, m + 1))
            selected = sorted(rng.choice(m, size=size, replace=False).tolist())
            phi = float(rng.uniform(0.05, 0.95))
            e = query_energy(sim, selected, MinimizerConfig(phi=phi))
            xi, gamma, total = energy_oracle(sim.values.tolist(), selected, phi)
            assert e.xi_sum == pytest.approx(xi, abs=1e-12)
            assert e.gamma_sum == pytest.approx(gamma, abs=1e-12)
            assert e.total == pytest.approx(total, abs=1e-12)
            assert e.total == pytest.approx(phi * e.xi_sum + e.gamma_sum, abs=1e-15)

    def test_empty_selection_rejected(self):
        with pytest.raises(ValueError):
            query_energy(uniform_sim(3, 0.5), [], MinimizerConfig())

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            query_energy(uniform_sim(3, 0.5), [0, 5], MinimizerConfig())


class TestExhaustiveMinimize:
    def test_single_frame(self):
        mq = exhaustive_minimize(uniform_sim(1, 0.0), MinimizerConfig(phi=0.4))
        assert mq.selected == [0]
        assert mq.energy.total == 0.0

    def test_uniform_case_full_enumeration(self):
        # For uniform off-diagonal 0.5 at phi=0.4 the enumeration gives
        # {0}: 1.0, {0,1}: 0.9, {0,2}: 0.9, {0,1,2}: 0.6 -> optimum {0,1,2}.
        sim = uniform_sim(3, 0.5)
        cfg = MinimizerConfig(phi=0.4)
        sel_oracle, total_oracle = exhaustive_oracle(sim.values.tolist(), 0.4)
        assert sel_oracle == [0, 1, 2]
        assert total_oracle == pytest.approx(0.6, abs=1e-15)
        mq = exhaustive_minimize(sim, cfg)
        assert mq.selected == [0, 1, 2]
        assert mq.energy.total == pytest.approx(0.6, abs=1e-15)

    def test_matches_oracle_on_random_instances(self, rng):
        for _ in range(30):
            m = int(rng.integers(1, 9))
            sim = random_sim(rng, m)
            phi = float(rng.uniform(0.1, 0.9))
            mq = exhaustive_minimize(sim, MinimizerConfig(phi=phi))
            sel, total = exhaustive_oracle(sim.values.tolist(), phi)
            assert mq.selected == sel
            assert mq.energy.total == pytest.approx(total, abs=1e-12)

    def test_never_worse_than_greedy(self, rng):
        for _ in range(60):
            m = int(rng.integers(1, 11))
            sim = random_sim(rng, m)
            cfg = MinimizerConfig(phi=float(rng.uniform(0.1, 0.9)))
            assert exhaustive_minimize(sim, cfg).energy.total <= greedy_minimize(sim, cfg).energy.total + 1e-12

    def test_size_limit(self):
        with pytest.raises(ValueError, match="16"):
            exhaustive_minimize(uniform_sim(17, 0.5), MinimizerConfig())
