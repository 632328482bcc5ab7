"""DER/JER against a sampling oracle plus anchored fixtures."""
from __future__ import annotations

import numpy as np
import pytest

from convoscore import (
    SegLst,
    der,
    evaluate_diarization,
    jer,
    optimal_mapping,
    speaker_count_report,
)

from conftest import make_segment, random_diar_session, segments_to_interval_dict
from oracles import sampled_diarization


class TestAnchoredFixtures:
    def test_identical_zero(self):
        lst = SegLst([
            make_segment("A", 0, 10, "w"),
            make_segment("B", 4, 6, "w"),
        ])
        report = evaluate_diarization(lst, lst, collar=0.25)
        assert report.der == 0.0
        assert report.jer == 0.0

    def test_miss_fixture(self):
        ref = SegLst([make_segment("A", 0, 10, "w")])
        hyp = SegLst([make_segment("1", 0, 8, "w")])
        report = evaluate_diarization(ref, hyp, collar=0.0)
        assert report.miss == pytest.approx(2.0)
        assert report.false_alarm == 0.0
        assert report.der == pytest.approx(0.2)

    def test_jer_half_missed(self):
        ref = SegLst([
            make_segment("A", 0, 10, "w"),
            make_segment("B", 20, 30, "w"),
        ])
        hyp = SegLst([make_segment("1", 0, 10, "w")])
        report = evaluate_diarization(ref, hyp, collar=0.0)
        assert report.jer == pytest.approx(50.0)
        assert report.per_speaker_jer == {"A": 0.0, "B": 100.0}

    def test_extra_hyp_speaker_leaves_jer_but_counts(self):
        ref = SegLst([make_segment("A", 0, 10, "w")])
        hyp = SegLst([
            make_segment("1", 0, 10, "w"),
            make_segment("2", 50, 55, "w"),
        ])
        report = evaluate_diarization(ref, hyp, collar=0.0)
        assert report.jer == 0.0
        assert report.false_alarm == pytest.approx(5.0)
        counts = speaker_count_report(ref, hyp)
        assert counts.difference == 1

    def test_label_permutation_invariant(self):
        ref = SegLst([
            make_segment("A", 0, 10, "w"),
            make_segment("B", 12, 20, "w"),
        ])
        hyp = SegLst([
            make_segment("x", 0, 9, "w"),
            make_segment("y", 12.5, 20, "w"),
        ])
        swapped = SegLst([
            make_segment("y", 0, 9, "w"),
            make_segment("x", 12.5, 20, "w"),
        ])
        a = evaluate_diarization(ref, hyp, collar=0.25)
        b = evaluate_diarization(ref, swapped, collar=0.25)
        assert (a.der, a.jer, a.miss, a.false_alarm, a.confusion) == (
            b.der, b.jer, b.miss, b.false_alarm, b.confusion
        )

    def test_empty_reference_rejected(self):
        hyp = SegLst([make_segment("1", 0, 1, "w")])
        with pytest.raises(ValueError, match="empty reference"):
            evaluate_diarization(SegLst(), hyp)

    def test_collar_excising_everything_rejected(self):
        ref = SegLst([make_segment("A", 0.0, 0.4, "w")])
        with pytest.raises(ValueError, match="collar"):
            evaluate_diarization(ref, ref, collar=10.0)

    def test_negative_collar_rejected(self):
        lst = SegLst([make_segment("A", 0, 1, "w")])
        with pytest.raises(ValueError):
            evaluate_diarization(lst, lst, collar=-0.1)

    def test_der_jer_wrappers(self):
        ref = SegLst([make_segment("A", 0, 10, "w")])
        hyp = SegLst([make_segment("1", 0, 8, "w")])
        assert der(ref, hyp, collar=0.0) == pytest.approx(0.2)
        assert jer(ref, hyp, collar=0.0) == pytest.approx(20.0)

    def test_speaker_count_deltas(self):
        def side(prefix, n):
            return SegLst([
                make_segment(f"{prefix}{i}", 2 * i, 2 * i + 1, "w")
                for i in range(n)
            ])
        assert speaker_count_report(side("r", 4), side("h", 4)).difference == 0
        assert speaker_count_report(side("r", 4), side("h", 6)).difference == 2
        assert speaker_count_report(side("r", 8), side("h", 5)).difference == -3


class TestConfusionFixture:
    def test_swapped_halves(self):
        # hyp swaps the speakers in [5,10]: pure confusion, no miss/fa
        ref = SegLst([
            make_segment("A", 0, 10, "w"),
            make_segment("B", 5, 10, "w"),
        ])
        hyp = SegLst([
            make_segment("1", 0, 10, "w"),
            make_segment("2", 0, 5, "w"),
        ])
        report = evaluate_diarization(ref, hyp, collar=0.0)
        # A->1 overlap 10 dominates; B finds nothing on [5,10] except 1
        assert report.mapping == {"A": "1"}
        assert report.miss == pytest.approx(5.0)
        assert report.false_alarm == pytest.approx(5.0)

    def test_confusion_counts_where_mapped_elsewhere(self):
        ref = SegLst([
            make_segment("A", 0, 6, "w"),
            make_segment("B", 6, 12, "w"),
        ])
        hyp = SegLst([
            make_segment("1", 0, 6, "w"),
            make_segment("2", 6, 9, "w"),
            make_segment("1", 9, 12, "w"),
        ])
        report = evaluate_diarization(ref, hyp, collar=0.0)
        assert report.mapping == {"A": "1", "B": "2"}
        # B's [9,12] is hyp speaker 1: confusion
        assert report.confusion == pytest.approx(3.0)
        assert report.der == pytest.approx(3.0 / 12.0)


class TestSamplingOracle:
    def _no_near_tie(self, ref, hyp, collar):
        # mapping ties flip JER under sampling noise; keep fixtures clean
        from itertools import permutations

        from convoscore.intervals import intersect, merge_intervals, subtract

        ref_iv = {
            s: merge_intervals(v)
            for s, v in segments_to_interval_dict(ref).items()
        }
        hyp_iv = {
            s: merge_intervals(v)
            for s, v in segments_to_interval_dict(hyp).items()
        }
        zones = []
        if collar > 0:
            for seg in ref:
                zones.append((seg.start_time - collar, seg.start_time + collar))
                zones.append((seg.end_time - collar, seg.end_time + collar))
            zones = merge_intervals(zones)

        def scored_overlap(a, b):
            inter = intersect(a, b)
            if collar > 0:
                inter = subtract(inter, zones)
            return float(np.sum([e - s for s, e in inter]))

        rs, hs = sorted(ref_iv), sorted(hyp_iv)
        size = max(len(rs), len(hs))
        totals = []
        for perm in permutations(range(size)):
            total = 0.0
            for i, j in enumerate(perm):
                if i < len(rs) and j < len(hs):
                    total += scored_overlap(ref_iv[rs[i]], hyp_iv[hs[j]])
            totals.append(total)
        totals.sort(reverse=True)
        return len(totals) < 2 or totals[0] - totals[1] > 0.05

    def test_der_jer_match_sampling(self, rng):
        checked = 0
        attempts = 0
        while checked < 120 and attempts < 600:
            attempts += 1
            ref, hyp = random_diar_session(rng)
            collar = float(rng.choice([0.0, 0.25]))
            if not self._no_near_tie(ref, hyp, collar):
                continue
            try:
                report = evaluate_diarization(ref, hyp, collar=collar)
            except ValueError:
                continue  # collar excised all speech
            want_der, want_jer = sampled_diarization(
                segments_to_interval_dict(ref),
                segments_to_interval_dict(hyp),
                collar,
            )
            boundaries = 4 * (len(ref) + len(hyp)) + 4
            tol = 0.002 * boundaries
            denom = report.total_reference_speech
            assert report.der == pytest.approx(want_der, abs=tol / denom)
            assert report.jer == pytest.approx(want_jer, abs=100 * tol)
            checked += 1
        assert checked >= 120


class TestOptimalMapping:
    def test_returns_same_der_as_report(self):
        ref = SegLst([
            make_segment("A", 0, 6, "w"),
            make_segment("B", 7, 12, "w"),
        ])
        hyp = SegLst([
            make_segment("p", 0, 5, "w"),
            make_segment("q", 7, 13, "w"),
        ])
        mapping, value = optimal_mapping(ref, hyp, collar=0.0)
        report = evaluate_diarization(ref, hyp, collar=0.0)
        assert mapping == report.mapping == {"A": "p", "B": "q"}
        assert value == pytest.approx(report.der)
