import math

import numpy as np
import pytest

from isoclust import (
    ClassifierHead,
    DataError,
    LabelAssignment,
    PointCloud,
    bce_multilabel_loss,
    classifier_objective,
    classifier_objective_terms,
    cross_entropy_loss,
    dot_distance_identity,
    sign_fn,
    sign_wgt,
    triplet_loss,
    triplet_objective_and_bound,
)


def random_single_label_instance(rng, n_max=12, k_max=3, d_max=6):
    n = int(rng.integers(3, n_max + 1))
    d = int(rng.integers(2, d_max + 1))
    k = int(rng.integers(2, k_max + 1))
    pts = rng.standard_normal((n, d))
    codes = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(codes)
    cloud = PointCloud(pts)
    labels = LabelAssignment.single([f"g{c}" for c in codes])
    head = ClassifierHead.random(d, len(labels.universe), rng)
    return cloud, labels, head, codes


def brute_classifier_objective(pts, codes, universe_codes, weights):
    total = 0.0
    for i in range(pts.shape[0]):
        for col, omega in enumerate(universe_codes):
            sgn = sign_fn(omega, f"g{codes[i]}")
            total += sgn * float(pts[i] @ weights[:, col])
    return -total


def finite_difference(fn, array, eps=1e-5):
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = fn()
        flat[i] = orig - eps
        lo = fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return grad


def assert_grad_close(analytic, numeric, rel=1e-4):
    scale = max(np.abs(numeric).max(), 1e-8)
    assert np.abs(analytic - numeric).max() <= rel * scale


class TestDotDistanceIdentity:
    def test_orthogonal_unit_vectors(self):
        assert dot_distance_identity([1.0, 0.0], [0.0, 1.0]) == (0.0, 0.0)

    def test_self_dot(self):
        assert dot_distance_identity([3.0, 4.0], [3.0, 4.0]) == (25.0, 25.0)

    def test_random_pair(self):
        rng = np.random.default_rng(1)
        lhs, rhs = dot_distance_identity(rng.standard_normal(16), rng.standard_normal(16))
        assert abs(lhs - rhs) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            dot_distance_identity([1.0], [1.0, 2.0])


class TestClassifierObjective:
    def test_single_point_hand_case(self):
        cloud = PointCloud([[1.0, 0.0]])
        labels = LabelAssignment.single(["A"], universe=("A", "B"))
        head = ClassifierHead(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert classifier_objective(cloud, labels, head) == 1.0

    def test_balanced_binary_norm_terms_vanish(self):
        rng = np.random.default_rng(9)
        pts = rng.standard_normal((8, 4))
        labels = LabelAssignment.single(["a"] * 4 + ["b"] * 4)
        head = ClassifierHead.random(4, 2, rng)
        terms = classifier_objective_terms(PointCloud(pts), labels, head)
        assert abs(terms.point_norm_term) < 1e-9
        assert abs(terms.class_norm_term) < 1e-9

    def test_direct_equals_expanded_and_brute(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            cloud, labels, head, codes = random_single_label_instance(rng)
            direct = classifier_objective(cloud, labels, head)
            terms = classifier_objective_terms(cloud, labels, head)
            assert direct == pytest.approx(terms.total, abs=1e-9, rel=1e-9)
            universe_codes = list(labels.universe)
            brute = brute_classifier_objective(
                cloud.points, codes, universe_codes, head.weights
            )
            assert direct == pytest.approx(brute, abs=1e-9, rel=1e-9)

    def test_multilabel_rejected(self):
        cloud = PointCloud([[0.0, 1.0], [1.0, 0.0]])
        labels = LabelAssignment.multi([{"a", "b"}, {"a"}])
        head = ClassifierHead(np.zeros((2, 2)))
        with pytest.raises(DataError):
            classifier_objective(cloud, labels, head)


class TestCrossEntropyLoss:
    def test_uniform_logits_give_log_k(self):
        cloud = PointCloud([[0.0, 0.0, 0.0]])
        labels = LabelAssignment.single(["a"], universe=("a", "b", "c", "d"))
        head = ClassifierHead(np.zeros((3, 4)))
        assert cross_entropy_loss(cloud, labels, head).loss == pytest.approx(math.log(4), rel=1e-12)

    def test_saturated_correct_class(self):
        cloud = PointCloud([[1.0]])
        labels = LabelAssignment.single(["a"], universe=("a", "b"))
        head = ClassifierHead(np.array([[50.0, 0.0]]))
        assert cross_entropy_loss(cloud, labels, head).loss < 1e-20

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            cloud, labels, head, _ = random_single_label_instance(rng, n_max=8, d_max=5)
            head.bias = rng.standard_normal(head.n_classes)
            res = cross_entropy_loss(cloud, labels, head)
            num_pts = finite_difference(
                lambda: cross_entropy_loss(cloud, labels, head).loss, cloud.points
            )
            num_w = finite_difference(
                lambda: cross_entropy_loss(cloud, labels, head).loss, head.weights
            )
            num_b = finite_difference(
                lambda: cross_entropy_loss(cloud, labels, head).loss, head.bias
            )
            assert_grad_close(res.grad_points, num_pts)
            assert_grad_close(res.grad_weights, num_w)
            assert_grad_close(res.grad_bias, num_b)


class TestBceMultilabelLoss:
    @staticmethod
    def instance(rng, n=6, d=4, k=3):
        pts = rng.standard_normal((n, d))
        sets = []
        for i in range(n):
            base = {f"s{rng.integers(k)}"}
            extra = {f"s{j}" for j in range(k) if rng.random() < 0.4}
            sets.append(base | extra)
        labels = LabelAssignment.multi(sets, universe=[f"s{j}" for j in range(k)])
        head = ClassifierHead.random(d, k, rng, with_bias=True)
        return PointCloud(pts), labels, head

    def test_zero_logits_give_log_two(self):
        cloud = PointCloud([[0.0, 0.0]])
        labels = LabelAssignment.multi([{"a"}], universe=("a", "b", "c"))
        head = ClassifierHead(np.zeros((2, 3)))
        assert bce_multilabel_loss(cloud, labels, head).loss == pytest.approx(math.log(2), rel=1e-12)

    def test_saturated_all_symbols(self):
        cloud = PointCloud([[1.0]])
        labels = LabelAssignment.multi([{"a", "b"}], universe=("a", "b"))
        head = ClassifierHead(np.array([[50.0, 50.0]]))
        assert bce_multilabel_loss(cloud, labels, head).loss < 1e-20

    def test_single_label_rejected(self):
        cloud = PointCloud([[0.0]])
        labels = LabelAssignment.single(["a"], universe=("a", "b"))
        head = ClassifierHead(np.zeros((1, 2)))
        with pytest.raises(DataError):
            bce_multilabel_loss(cloud, labels, head)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            cloud, labels, head = self.instance(rng)
            res = bce_multilabel_loss(cloud, labels, head)
            num_pts = finite_difference(
                lambda: bce_multilabel_loss(cloud, labels, head).loss, cloud.points
            )
            num_w = finite_difference(
                lambda: bce_multilabel_loss(cloud, labels, head).loss, head.weights
            )
            num_b = finite_difference(
                lambda: bce_multilabel_loss(cloud, labels, head).loss, head.bias
            )
            assert_grad_close(res.grad_points, num_pts)
            assert_grad_close(res.grad_weights, num_w)
            assert_grad_close(res.grad_bias, num_b)


class TestTripletLoss:
    def test_negative_farther_gives_zero(self):
        assert triplet_loss([0.0, 0.0], [1.0, 0.0], [5.0, 0.0]) == 0.0

    def test_positive_farther(self):
        assert triplet_loss([0.0, 0.0], [3.0, 0.0], [1.0, 0.0]) == 2.0

    def test_equal_positive_negative(self):
        assert triplet_loss([0.0], [2.0], [2.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            triplet_loss([0.0], [1.0, 2.0], [3.0])


class TestSignWgt:
    COUNTS = {"a": 4, "b": 6}

    def test_same_label(self):
        assert sign_wgt("a", "a", self.COUNTS, 10) == -6

    def test_different_label(self):
        assert sign_wgt("a", "b", self.COUNTS, 10) == 3

    def test_singleton_same(self):
        assert sign_wgt("x", "x", {"x": 1, "y": 9}, 10) == 1 - 10

    def test_unknown_label(self):
        with pytest.raises(DataError):
            sign_wgt("z", "a", self.COUNTS, 10)

    def test_inconsistent_counts(self):
        with pytest.raises(DataError):
            sign_wgt("a", "a", self.COUNTS, 11)


def brute_triplet_objective(pts, codes):
    n = len(codes)
    total = 0.0
    found = False
    for a in range(n):
        for p in range(n):
            if p == a or codes[p] != codes[a]:
                continue
            for neg in range(n):
                if codes[neg] == codes[a]:
                    continue
                found = True
                total -= triplet_loss(pts[a], pts[p], pts[neg])
    return total, found


def brute_weighted_bound(pts, codes):
    labels = [f"g{c}" for c in codes]
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    total = 0.0
    n = len(codes)
    for j in range(n):
        for k in range(n):
            w = sign_wgt(labels[j], labels[k], counts, n)
            total += w * math.dist(pts[j], pts[k])
    return total


class TestTripletObjectiveAndBound:
    def test_collapsed_clusters(self):
        cloud = PointCloud([[0.0, 0.0]] * 2 + [[5.0, 0.0]] * 2)
        labels = LabelAssignment.single(["a", "a", "b", "b"])
        objective, bound = triplet_objective_and_bound(cloud, labels)
        assert objective == 0.0
        assert bound >= 0.0

    def test_matches_brute_force_and_bound_holds(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(4, 11))
            k = int(rng.integers(2, 4))
            codes = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
            rng.shuffle(codes)
            pts = rng.standard_normal((n, 3))
            want, found = brute_triplet_objective(pts, codes)
            cloud = PointCloud(pts)
            labels = LabelAssignment.single([f"g{c}" for c in codes])
            if not found:
                with pytest.raises(DataError):
                    triplet_objective_and_bound(cloud, labels)
                continue
            objective, bound = triplet_objective_and_bound(cloud, labels)
            assert objective == pytest.approx(want, rel=1e-9, abs=1e-9)
            assert bound == pytest.approx(brute_weighted_bound(pts, codes), rel=1e-9, abs=1e-9)
            assert objective <= bound + 1e-9

    def test_interleaved_layout_strictly_negative(self):
        # one label threaded between the other's points
        pts = np.array([[0.0], [2.0], [4.0], [1.0], [3.0]])
        labels = LabelAssignment.single(["a", "a", "a", "b", "b"])
        objective, bound = triplet_objective_and_bound(PointCloud(pts), labels)
        assert objective < 0.0
        assert objective <= bound

    def test_no_valid_triple_errors(self):
        cloud = PointCloud([[0.0], [1.0]])
        labels = LabelAssignment.single(["a", "b"])
        with pytest.raises(DataError, match="triplet"):
            triplet_objective_and_bound(cloud, labels)
