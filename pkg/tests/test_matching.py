import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscm.descriptor import Descriptor
from mscm.errors import (DimensionMismatch, EmptyModelSet, InvalidConfig, MissingPart,
                         NotEnoughClasses, UnpairedCultivar)
from mscm.matching import (EvalReport, JointDescriptor, confusion_image, evaluate,
                           joint_dissimilarity, nn_classify, part_dissimilarity,
                           scaling_study, sweep_w, write_report)


def D(values, C=1, K=1):
    return Descriptor(C, K, np.asarray(values, dtype=np.float64))


def joint(cid, s, u, m=None, l=None):
    m = u if m is None else m
    l = u if l is None else l
    return JointDescriptor(cid, s, u, m, l)


def random_samples(n, noise=0.0, seed=0, C=2, K=3):
    """``n`` cultivars; sample 2 is sample 1 plus ``noise``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        base = [rng.random(4 * C * K) for _ in range(3)]
        for s in (1, 2):
            parts = [Descriptor(C, K, b + (s - 1) * noise * rng.random(4 * C * K)) for b in base]
            out.append(JointDescriptor(f"c{i:03d}", s, *parts))
    return out


class TestPartDissimilarity:
    def test_identical_zero(self):
        a = D([1, 2, 3, 4])
        assert part_dissimilarity(a, a, 0.3) == 0.0

    def test_w1_ignores_appearance(self):
        assert part_dissimilarity(D([1, 2, 3, 4]), D([1, 2, 9, 0]), 1.0) == 0.0

    def test_w0_ignores_shape(self):
        assert part_dissimilarity(D([1, 2, 3, 4]), D([5, 0, 3, 4]), 0.0) == 0.0

    def test_hand_arithmetic(self):
        # shape |1-2| + |2-4| = 3, appearance |3-3.5| + |4-1| = 3.5
        assert part_dissimilarity(D([1, 2, 3, 4]), D([2, 4, 3.5, 1]), 0.25) == pytest.approx(
            0.25 * 3 + 0.75 * 3.5, abs=1e-15)

    def test_block_split_follows_layout(self):
        # C=2, K=1: entries 0..3 are eta, h; 4..7 are mu, sigma
        a = D(np.zeros(8), C=2)
        b = D([1, 0, 0, 0, 0, 0, 0, 2], C=2)
        assert part_dissimilarity(a, b, 0.5) == 0.5 * 1 + 0.5 * 2

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            part_dissimilarity(D(np.zeros(4)), D(np.zeros(8), C=2))

    @pytest.mark.parametrize("W", [-0.1, 1.5])
    def test_bad_w(self, W):
        with pytest.raises(InvalidConfig):
            part_dissimilarity(D(np.zeros(4)), D(np.zeros(4)), W)


class TestJoint:
    def test_identical_zero(self):
        a = joint("x", 1, D([1, 2, 3, 4]))
        assert joint_dissimilarity(a, a) == 0.0

    def test_only_upper_differs(self):
        u1, u2, m = D([1, 2, 3, 4]), D([0, 0, 0, 0]), D([5, 5, 5, 5])
        a, b = joint("x", 1, u1, m, m), joint("y", 1, u2, m, m)
        assert joint_dissimilarity(a, b, 0.4) == part_dissimilarity(u1, u2, 0.4)

    def test_hand_sum(self):
        a = JointDescriptor("a", 1, D([0, 0, 0, 0]), D([1, 1, 1, 1]), D([2, 0, 0, 0]))
        b = JointDescriptor("b", 1, D([1, 0, 0, 0]), D([1, 1, 1, 3]), D([0, 0, 1, 0]))
        # U: W*1 ; M: (1-W)*2 ; L: W*2 + (1-W)*1
        W = 0.29
        assert joint_dissimilarity(a, b, W) == pytest.approx(W * 1 + (1 - W) * 2 + W * 2 + (1 - W) * 1, abs=1e-15)

    def test_missing_part(self):
        with pytest.raises(MissingPart):
            JointDescriptor("a", 1, D([0, 0, 0, 0]), None, D([0, 0, 0, 0]))

    def test_mixed_dims(self):
        with pytest.raises(DimensionMismatch):
            JointDescriptor("a", 1, D(np.zeros(4)), D(np.zeros(8), C=2), D(np.zeros(4)))

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), W=st.floats(0, 1))
    def test_symmetric(self, seed, W):
        a, b = random_samples(2, seed=seed)[::2]
        assert abs(joint_dissimilarity(a, b, W) - joint_dissimilarity(b, a, W)) <= 1e-12


class TestNN:
    def test_equal_model(self):
        models = [joint(f"c{i}", 1, D([i, 0, 0, 0])) for i in range(4)]
        assert nn_classify(joint("q", 2, D([2, 0, 0, 0])), models) == "c2"

    def test_tie_lowest_index(self):
        models = [joint("b", 1, D([1, 0, 0, 0])), joint("a", 1, D([-1, 0, 0, 0]))]
        assert nn_classify(joint("q", 2, D([0, 0, 0, 0])), models, 1.0) == "b"

    def test_empty(self):
        with pytest.raises(EmptyModelSet):
            nn_classify(joint("q", 2, D([0, 0, 0, 0])), [])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), scale=st.floats(1e-3, 1e3))
    def test_rescaling_invariant(self, seed, scale):
        samples = random_samples(6, seed=seed)
        models, q = samples[::2], samples[3]
        base = nn_classify(q, models)
        scaled = nn_classify(q, models, dissimilarity=lambda a, b: scale * joint_dissimilarity(a, b))
        assert base == scaled


class TestEvaluate:
    def test_two_hundred_cultivars(self):
        rep = evaluate(random_samples(200, noise=0.01))
        assert rep.n_tests == 400
        assert rep.accuracy == rep.n_correct / 400

    def test_identical_pairs(self):
        rep = evaluate(random_samples(5))
        assert rep.accuracy == 1.0 and rep.n_correct == 10
        assert rep.per_part == {"U": 1.0, "M": 1.0, "L": 1.0}

    def test_confusion_range(self):
        rep = evaluate(random_samples(7, noise=0.2))
        assert rep.confusion.shape == (7, 7)
        assert rep.confusion.min() == 0.0 and rep.confusion.max() == 1.0

    def test_confusion_axes(self):
        # row i = second sample of cultivar i, column j = first sample of j
        samples = random_samples(3, noise=0.5, seed=2)
        rep = evaluate(samples, 0.29)
        raw = np.array([[joint_dissimilarity(samples[2 * i + 1], samples[2 * j], 0.29)
                         for j in range(3)] for i in range(3)])
        expect = (raw - raw.min()) / (raw.max() - raw.min())
        assert np.allclose(rep.confusion, expect, atol=1e-12)

    def test_constant_confusion_flagged(self):
        d = D([1, 1, 1, 1])
        rep = evaluate([joint(c, s, d) for c in "ab" for s in (1, 2)])
        assert rep.flags and np.all(rep.confusion == 0)

    def test_unpaired(self):
        samples = random_samples(3)[:-1]
        with pytest.raises(UnpairedCultivar):
            evaluate(samples)

    def test_duplicate_sample(self):
        samples = random_samples(2)
        with pytest.raises(UnpairedCultivar):
            evaluate(samples + samples[:1])

    def test_deterministic(self):
        a = evaluate(random_samples(20, noise=0.3, seed=5))
        b = evaluate(random_samples(20, noise=0.3, seed=5))
        assert a.to_json() == b.to_json() and a.confusion_csv() == b.confusion_csv()

    def test_part_weight(self):
        samples = random_samples(10, noise=0.8, seed=3)
        a = evaluate(samples, 0.29, part_W=0.0)
        b = evaluate(samples, 0.29, part_W=1.0)
        assert a.accuracy == b.accuracy
        assert a.part_W == 0.0 and b.part_W == 1.0

    def test_matrix_path_equals_scalar_path(self):
        samples = random_samples(12, noise=0.9, seed=8)
        fast = evaluate(samples, 0.37)
        slow = evaluate(samples, 0.37, dissimilarity=lambda a, b: joint_dissimilarity(a, b, 0.37))
        assert fast.n_correct == slow.n_correct
        assert np.allclose(fast.confusion, slow.confusion, atol=1e-12)


class TestSweep:
    def test_grid(self):
        rows = sweep_w(random_samples(4, noise=0.1), 101)
        assert [w for w, _ in rows] == [i / 100 for i in range(101)]
        assert rows[29][0] == 0.29

    def test_constant_when_identical(self):
        d = D([1, 2, 3, 4])
        rows = sweep_w([joint(c, s, d) for c in "abc" for s in (1, 2)], 11)
        assert len({acc for _, acc in rows}) == 1

    def test_texture_informative(self):
        # appearance identifies the class exactly, shape is noise
        rng = np.random.default_rng(11)
        samples = []
        for i in range(15):
            app = np.array([i, 0.5 * i])
            for s in (1, 2):
                parts = [D(np.concatenate([rng.random(2) * 20, app])) for _ in range(3)]
                samples.append(JointDescriptor(f"c{i:02d}", s, *parts))
        acc = [a for _, a in sweep_w(samples, 51)]
        assert acc[0] == 1.0 and acc[-1] < 1.0
        assert all(x >= y for x, y in zip(acc, acc[1:]))

    def test_sweep_matches_evaluate(self):
        samples = random_samples(10, noise=0.7, seed=4)
        for W, acc in sweep_w(samples, 21):
            assert acc == evaluate(samples, W).accuracy

    def test_steps(self):
        with pytest.raises(InvalidConfig):
            sweep_w(random_samples(2), 1)


class TestScaling:
    def test_single_point(self):
        samples = random_samples(8, noise=0.6, seed=1)
        rows = scaling_study(samples, 5, 5)
        prefix = [s for s in samples if s.cultivar_id < "c005"]
        assert rows == [(5, evaluate(prefix).accuracy)]

    def test_separable(self):
        rows = scaling_study(random_samples(9), 2, 9, 3)
        assert rows == [(2, 1.0), (5, 1.0), (8, 1.0)]

    def test_full_equals_evaluate(self):
        samples = random_samples(6, noise=0.9, seed=6)
        assert scaling_study(samples, 2, 6, 2)[-1] == (6, evaluate(samples).accuracy)

    def test_not_enough(self):
        with pytest.raises(NotEnoughClasses):
            scaling_study(random_samples(3), 2, 4)

    def test_bad_grid(self):
        with pytest.raises(InvalidConfig):
            scaling_study(random_samples(3), 3, 2)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), W=st.floats(0, 1))
def test_pseudometric(seed, W):
    rng = np.random.default_rng(seed)
    a, b, c = (Descriptor(7, 7, rng.random(196) * rng.choice([1e-3, 1, 1e3])) for _ in range(3))
    ab, bc, ac = (part_dissimilarity(x, y, W) for x, y in ((a, b), (b, c), (a, c)))
    assert ab >= 0 and part_dissimilarity(a, a, W) == 0.0
    assert abs(ab - part_dissimilarity(b, a, W)) <= 1e-12
    assert ac <= ab + bc + 1e-12 * max(1.0, ab + bc)


class TestExport:
    def test_files(self, tmp_path):
        rep = evaluate(random_samples(4, noise=0.4))
        paths = write_report(rep, tmp_path)
        assert [p.name for p in paths] == ["report.json", "confusion.csv", "confusion.pgm"]
        data = json.loads(paths[0].read_text())
        assert data["accuracy"] == data["n_correct"] / data["n_tests"]
        lines = paths[1].read_text().splitlines()
        assert len(lines) == 5 and lines[0].startswith("second\\first,c000")

    def test_pgm_convention(self):
        img = confusion_image(np.array([[0.0, 1.0], [0.5, 0.25]]))
        assert img.tolist() == [[0, 255], [128, 64]]

    def test_report_type(self):
        assert isinstance(evaluate(random_samples(2)), EvalReport)
