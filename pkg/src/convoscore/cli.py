"""Command line interface.

Subcommands::

    score      tcpwer / cpwer / dawer / der / jer over a manifest
    stats      occupancy and turn-taking statistics per session
    sdr        projection SDR of estimate channels against a reference
    normalize  apply a text normalizer to a segment list file
    condition  merge / split diarization segments in a file
    summ       summarization evaluation with a generation client

A manifest is a JSON object with scenarios, each holding sessions with
file paths (relative paths resolve against the manifest's directory)::

    {"scenarios": [{"name": "dinner", "sessions": [
        {"session_id": "S02", "reference": "ref/S02.json",
         "hypothesis": "hyp/S02.json", "uem": "uem/S02.uem",
         "reference_audio": "audio/S02_ref.wav",
         "estimate_audio": "audio/S02_est.wav"}]}]}

Reports are written as canonical JSON (sorted keys) plus CSV with a fixed
column order; identical inputs and seeds produce byte-identical reports.
Exit status is 0 only when no session errored, or when ``--skip-errors``
is given and at least one session succeeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Optional, Sequence

from . import __version__
from .conversation import EventParams, event_duration_stats, extract_events, occupancy
from .diarization import evaluate_diarization, speaker_count_report
from .postproc import PostprocParams, condition_segments
from .segments import (
    SegLst,
    dump_seglst,
    load_seglst,
    parse_uem,
    apply_uem,
)
from .summarization import (
    HttpGenerationClient,
    MockGenerationClient,
    build_prompt,
    correlate,
    generate_summaries,
    relabel_speakers,
    render_tagged,
    score_bundle_pair,
    speaker_numbering,
)
from .textnorm import available_profiles, get_profile
from .wer import ErrorCounts, accumulate, cp_wer, da_wer, macro_average, tcp_wer

WER_METRICS = ("tcpwer", "cpwer", "dawer")
DIAR_METRICS = ("der", "jer")

WER_CSV_COLUMNS = [
    "level", "scenario", "session_id", "metric", "reference_length",
    "correct", "substitutions", "deletions", "insertions", "errors",
    "error_rate",
]
DIAR_CSV_COLUMNS = [
    "level", "scenario", "session_id", "metric", "miss", "false_alarm",
    "confusion", "total_reference_speech", "der", "jer",
    "ref_speakers", "hyp_speakers",
]
STATS_CSV_COLUMNS = (
    ["level", "scenario", "session_id", "span_start", "span_end",
     "silence_pct", "single_speaker_pct", "overlap_pct",
     "ref_speakers"]
    + [f"{kind}_{field}"
       for kind in ("ipu", "pause", "gap", "backchannel", "interruption", "turn")
       for field in ("count", "mean", "median", "p10", "p90")]
)
SDR_CSV_COLUMNS = [
    "level", "scenario", "session_id", "channel", "sdr_db",
    "sdr_min", "sdr_max", "sdr_mean",
]
SUMM_CSV_COLUMNS = [
    "level", "scenario", "session_id", "tcp_wer",
    "rouge1_mean", "rouge1_se", "rouge2_mean", "rouge2_se",
    "rougeL_mean", "rougeL_se", "n_pairs", "any_truncated",
]


@dataclass(frozen=True)
class SessionSpec:
    scenario: str
    session_id: str
    reference: Optional[str] = None
    hypothesis: Optional[str] = None
    uem: Optional[str] = None
    reference_audio: Optional[str] = None
    estimate_audio: Optional[str] = None


class ManifestError(ValueError):
    pass


def load_manifest(path: str) -> list[SessionSpec]:
    """Parse and validate a manifest; paths become absolute."""
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("scenarios"), list):
        raise ManifestError("manifest must be an object with a 'scenarios' array")
    specs: list[SessionSpec] = []
    for s_index, scenario in enumerate(data["scenarios"]):
        if not isinstance(scenario, dict) or "name" not in scenario:
            raise ManifestError(f"scenario {s_index} must be an object with 'name'")
        name = scenario["name"]
        sessions = scenario.get("sessions")
        if not isinstance(sessions, list) or not sessions:
            raise ManifestError(f"scenario {name!r} needs a non-empty 'sessions' array")
        seen = set()
        for entry in sessions:
            if not isinstance(entry, dict) or "session_id" not in entry:
                raise ManifestError(
                    f"scenario {name!r}: sessions need a 'session_id'"
                )
            sid = entry["session_id"]
            if sid in seen:
                raise ManifestError(f"scenario {name!r}: duplicate session {sid!r}")
            seen.add(sid)
            specs.append(
                SessionSpec(
                    scenario=name,
                    session_id=sid,
                    reference=resolve(entry.get("reference")),
                    hypothesis=resolve(entry.get("hypothesis")),
                    uem=resolve(entry.get("uem")),
                    reference_audio=resolve(entry.get("reference_audio")),
                    estimate_audio=resolve(entry.get("estimate_audio")),
                )
            )
    return specs


def _load_side(path: Optional[str], spec: SessionSpec, *, required: bool) -> SegLst:
    if path is None:
        if required:
            raise ValueError(f"session {spec.session_id!r} is missing a file path")
        return SegLst()
    lst = load_seglst(path)
    return lst.filter(lambda seg: seg.session_id == spec.session_id)


def _session_uem(spec: SessionSpec, global_uem: Optional[str]):
    regions = []
    for source in (spec.uem, global_uem):
        if source:
            with open(source, "r", encoding="utf-8") as handle:
                regions.extend(parse_uem(handle.read()))
    return [r for r in regions if r.session_id == spec.session_id]


def _prepare_pair(
    spec: SessionSpec, normalizer: str, global_uem: Optional[str]
) -> tuple[SegLst, SegLst]:
    ref = _load_side(spec.reference, spec, required=True)
    hyp = _load_side(spec.hypothesis, spec, required=True)
    regions = _session_uem(spec, global_uem)
    if regions:
        ref = apply_uem(ref, regions)
        hyp = apply_uem(hyp, regions)
    profile = get_profile(normalizer)
    ref = ref.map_words(profile.apply)
    hyp = hyp.map_words(profile.apply)
    return ref, hyp


# ---------------------------------------------------------------------------
# per-session workers (top level so a process pool can pickle them)


def _score_session(task) -> dict[str, Any]:
    spec, metric, collar, normalizer, global_uem = task
    ref, hyp = _prepare_pair(spec, normalizer, global_uem)
    if metric in WER_METRICS:
        if metric == "tcpwer":
            counts, assignment = tcp_wer(ref, hyp, collar)
        elif metric == "cpwer":
            counts, assignment = cp_wer(ref, hyp)
        else:
            counts, assignment = da_wer(ref, hyp)
        return {
            "session_id": spec.session_id,
            "counts": asdict(counts),
            "errors": counts.errors,
            "error_rate": counts.error_rate,
            "assignment": [list(p) for p in assignment.pairs],
            "assignment_criterion": assignment.criterion,
        }
    report = evaluate_diarization(ref, hyp, collar)
    return {
        "session_id": spec.session_id,
        "miss": report.miss,
        "false_alarm": report.false_alarm,
        "confusion": report.confusion,
        "total_reference_speech": report.total_reference_speech,
        "der": report.der,
        "jer": report.jer,
        "per_speaker_jer": dict(report.per_speaker_jer),
        "mapping": dict(report.mapping),
        "ref_speakers": report.ref_speaker_count,
        "hyp_speakers": report.hyp_speaker_count,
    }


def _stats_session(task) -> dict[str, Any]:
    spec, side, normalizer, global_uem = task
    ref, hyp = _prepare_pair(spec, normalizer, global_uem)
    lst = ref if side == "reference" else hyp
    if len(lst) == 0:
        raise ValueError(f"session {spec.session_id!r}: no segments on {side} side")
    regions = _session_uem(spec, global_uem)
    if regions:
        span = (
            min(r.start_time for r in regions),
            max(r.end_time for r in regions),
        )
    else:
        span = (
            min(seg.start_time for seg in lst),
            max(seg.end_time for seg in lst),
        )
    occ = occupancy(lst, span)
    events = extract_events(lst, EventParams())
    stats = event_duration_stats(events)
    return {
        "session_id": spec.session_id,
        "span": list(span),
        "occupancy": asdict(occ),
        "speakers": len(lst.speakers()),
        "events": {kind: asdict(s) for kind, s in stats.items()},
    }


def _sdr_session(task) -> dict[str, Any]:
    from .audio import SdrConfig, channel_sdr_sweep, read_wav, utterance_sdr_stats

    spec, filter_taps = task
    if not spec.reference_audio or not spec.estimate_audio:
        raise ValueError(
            f"session {spec.session_id!r} needs reference_audio and estimate_audio"
        )
    ref = read_wav(spec.reference_audio)
    est = read_wav(spec.estimate_audio)
    if ref.n_channels != 1:
        raise ValueError(
            f"reference audio must be mono, got {ref.n_channels} channels"
        )
    config = SdrConfig(filter_taps=filter_taps)
    values = channel_sdr_sweep(ref.samples[0], est.samples, config)
    channels = [
        {"channel": channel, "sdr_db": value} for channel, value in enumerate(values)
    ]
    stats = utterance_sdr_stats([c["sdr_db"] for c in channels])
    return {
        "session_id": spec.session_id,
        "channels": channels,
        "stats": asdict(stats),
    }


def _summ_session(task) -> dict[str, Any]:
    spec, collar, normalizer, global_uem, client_config, seeds, log_path = task
    ref, hyp = _prepare_pair(spec, normalizer, global_uem)
    if len(ref) == 0:
        raise ValueError(f"session {spec.session_id!r}: empty reference")
    counts, _ = tcp_wer(ref, hyp, collar)
    relabeled = relabel_speakers(hyp, ref, collar)
    order = sorted(
        {seg.speaker for seg in ref},
        key=lambda spk: min(
            s.start_time for s in ref if s.speaker == spk
        ),
    )
    extras = sorted(
        {seg.speaker for seg in relabeled} - set(order),
        key=lambda label: int(label.rsplit(" ", 1)[1]) if label.startswith("speaker ")
        and label.rsplit(" ", 1)[1].isdigit() else 10 ** 9,
    )
    speaker_order = order + extras
    ref_tagged = render_tagged(ref, speaker_order)
    hyp_tagged = render_tagged(relabeled, speaker_order)
    client = _build_client(client_config)
    ref_bundle = generate_summaries(
        spec.session_id, build_prompt(ref_tagged), seeds, client, log_path=log_path
    )
    hyp_bundle = generate_summaries(
        spec.session_id, build_prompt(hyp_tagged), seeds, client, log_path=log_path
    )
    scores = score_bundle_pair(hyp_bundle, ref_bundle)
    return {
        "session_id": spec.session_id,
        "tcp_wer": counts.error_rate,
        "n_summaries": len(hyp_bundle.summaries),
        "n_pairs": scores.n_pairs,
        "rouge_mean": dict(scores.mean),
        "rouge_std_error": dict(scores.std_error),
        "any_truncated": any(hyp_bundle.truncated) or any(ref_bundle.truncated),
    }


def _build_client(config: dict):
    if config["kind"] == "mock":
        return MockGenerationClient()
    return HttpGenerationClient(
        url=config["url"],
        model=config["model"],
        api_key_env=config["api_key_env"],
    )


# ---------------------------------------------------------------------------
# session pool and report writing


def _run_sessions(
    specs: Sequence[SessionSpec],
    worker: Callable,
    tasks: Sequence,
    jobs: int,
) -> tuple[dict[tuple[str, str], dict], list[dict]]:
    """Run one task per session; collect results and errors."""
    results: dict[tuple[str, str], dict] = {}
    errors: list[dict] = []
    if jobs <= 1:
        outcomes = []
        for task in tasks:
            try:
                outcomes.append(worker(task))
            except Exception as exc:
                outcomes.append(exc)
    else:
        outcomes = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(worker, task) for task in tasks]
            for future in futures:
                try:
                    outcomes.append(future.result())
                except Exception as exc:
                    outcomes.append(exc)
    for spec, outcome in zip(specs, outcomes):
        key = (spec.scenario, spec.session_id)
        if isinstance(outcome, Exception):
            errors.append(
                {
                    "scenario": spec.scenario,
                    "session_id": spec.session_id,
                    "error": f"{type(outcome).__name__}: {outcome}",
                }
            )
        else:
            results[key] = outcome
    return results, errors


def _write_reports(report_dir: Optional[str], name: str,
                   report: dict, csv_columns: list[str],
                   csv_rows: list[dict]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=csv_columns, lineterminator="\n")
    writer.writeheader()
    for row in csv_rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in csv_columns})
    if report_dir:
        os.makedirs(report_dir, exist_ok=True)
        with open(os.path.join(report_dir, f"{name}.json"), "w",
                  encoding="utf-8") as handle:
            handle.write(text)
        with open(os.path.join(report_dir, f"{name}.csv"), "w",
                  encoding="utf-8") as handle:
            handle.write(buffer.getvalue())


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _exit_code(n_sessions: int, errors: list[dict], skip_errors: bool) -> int:
    if not errors:
        return 0
    if skip_errors and len(errors) < n_sessions:
        return 0
    return 1


def _group_by_scenario(specs: Sequence[SessionSpec]) -> dict[str, list[SessionSpec]]:
    grouped: dict[str, list[SessionSpec]] = {}
    for spec in specs:
        grouped.setdefault(spec.scenario, []).append(spec)
    return grouped


def _json_rate(value):
    return None if value is None else float(value)


# ---------------------------------------------------------------------------
# commands


def cmd_score(args) -> int:
    specs = load_manifest(args.manifest)
    metric = args.metric
    collar = args.collar
    if collar is None:
        collar = 5.0 if metric in WER_METRICS else 0.25
    tasks = [
        (spec, metric, collar, args.normalizer, args.uem) for spec in specs
    ]
    results, errors = _run_sessions(specs, _score_session, tasks, args.jobs)

    scenario_blocks = []
    csv_rows = []
    scenario_rates = []
    for scenario, members in sorted(_group_by_scenario(specs).items()):
        session_blocks = []
        got = []
        for spec in sorted(members, key=lambda s: s.session_id):
            outcome = results.get((spec.scenario, spec.session_id))
            if outcome is None:
                continue
            got.append(outcome)
            session_blocks.append(outcome)
            if metric in WER_METRICS:
                counts = outcome["counts"]
                csv_rows.append(
                    {
                        "level": "session", "scenario": scenario,
                        "session_id": spec.session_id, "metric": metric,
                        "reference_length": counts["reference_length"],
                        "correct": counts["correct"],
                        "substitutions": counts["substitutions"],
                        "deletions": counts["deletions"],
                        "insertions": counts["insertions"],
                        "errors": outcome["errors"],
                        "error_rate": outcome["error_rate"],
                    }
                )
            else:
                csv_rows.append(
                    {
                        "level": "session", "scenario": scenario,
                        "session_id": spec.session_id, "metric": metric,
                        "miss": outcome["miss"],
                        "false_alarm": outcome["false_alarm"],
                        "confusion": outcome["confusion"],
                        "total_reference_speech": outcome["total_reference_speech"],
                        "der": outcome["der"], "jer": outcome["jer"],
                        "ref_speakers": outcome["ref_speakers"],
                        "hyp_speakers": outcome["hyp_speakers"],
                    }
                )
        block: dict[str, Any] = {"name": scenario, "sessions": session_blocks}
        if got and metric in WER_METRICS:
            total = accumulate(
                ErrorCounts(**o["counts"]) for o in got
            )
            block["accumulated"] = asdict(total)
            block["error_rate"] = _json_rate(total.error_rate)
            if total.error_rate is not None:
                scenario_rates.append(total.error_rate)
            csv_rows.append(
                {
                    "level": "scenario", "scenario": scenario, "session_id": "",
                    "metric": metric,
                    "reference_length": total.reference_length,
                    "correct": total.correct,
                    "substitutions": total.substitutions,
                    "deletions": total.deletions,
                    "insertions": total.insertions,
                    "errors": total.errors,
                    "error_rate": total.error_rate,
                }
            )
        elif got:
            miss = sum(o["miss"] for o in got)
            fa = sum(o["false_alarm"] for o in got)
            conf = sum(o["confusion"] for o in got)
            denom = sum(o["total_reference_speech"] for o in got)
            pooled_jer = [
                value for o in got for value in o["per_speaker_jer"].values()
            ]
            scenario_der = (miss + fa + conf) / denom if denom > 0 else None
            scenario_jer = (
                sum(pooled_jer) / len(pooled_jer) if pooled_jer else None
            )
            block["accumulated"] = {
                "miss": miss, "false_alarm": fa, "confusion": conf,
                "total_reference_speech": denom,
            }
            block["der"] = scenario_der
            block["jer"] = scenario_jer
            value = scenario_der if metric == "der" else scenario_jer
            if value is not None:
                scenario_rates.append(value)
            csv_rows.append(
                {
                    "level": "scenario", "scenario": scenario, "session_id": "",
                    "metric": metric, "miss": miss, "false_alarm": fa,
                    "confusion": conf, "total_reference_speech": denom,
                    "der": scenario_der, "jer": scenario_jer,
                    "ref_speakers": "", "hyp_speakers": "",
                }
            )
        scenario_blocks.append(block)

    macro = macro_average(scenario_rates) if scenario_rates else None
    report = {
        "command": "score",
        "tool": {"name": "convoscore", "version": __version__},
        "config": {
            "metric": metric,
            "collar": collar,
            "normalizer": args.normalizer,
        },
        "scenarios": scenario_blocks,
        "macro_average": macro,
        "errors": errors,
    }
    columns = WER_CSV_COLUMNS if metric in WER_METRICS else DIAR_CSV_COLUMNS
    if macro is not None:
        macro_row = {k: "" for k in columns}
        macro_row.update({"level": "macro", "scenario": "", "session_id": "",
                          "metric": metric})
        rate_key = "error_rate" if metric in WER_METRICS else metric
        macro_row[rate_key] = macro
        csv_rows.append(macro_row)
    _write_reports(args.report_dir, "score", report, columns, csv_rows)
    _print_summary(report, errors)
    return _exit_code(len(specs), errors, args.skip_errors)


def cmd_stats(args) -> int:
    specs = load_manifest(args.manifest)
    tasks = [(spec, args.side, args.normalizer, args.uem) for spec in specs]
    results, errors = _run_sessions(specs, _stats_session, tasks, args.jobs)
    scenario_blocks = []
    csv_rows = []
    for scenario, members in sorted(_group_by_scenario(specs).items()):
        session_blocks = []
        for spec in sorted(members, key=lambda s: s.session_id):
            outcome = results.get((spec.scenario, spec.session_id))
            if outcome is None:
                continue
            session_blocks.append(outcome)
            row = {
                "level": "session", "scenario": scenario,
                "session_id": spec.session_id,
                "span_start": outcome["span"][0],
                "span_end": outcome["span"][1],
                "silence_pct": outcome["occupancy"]["silence_pct"],
                "single_speaker_pct": outcome["occupancy"]["single_speaker_pct"],
                "overlap_pct": outcome["occupancy"]["overlap_pct"],
                "ref_speakers": outcome["speakers"],
            }
            for kind in ("ipu", "pause", "gap", "backchannel",
                         "interruption", "turn"):
                kind_stats = outcome["events"].get(kind)
                for field in ("count", "mean", "median", "p10", "p90"):
                    row[f"{kind}_{field}"] = (
                        kind_stats[field] if kind_stats else None
                    )
            csv_rows.append(row)
        scenario_blocks.append({"name": scenario, "sessions": session_blocks})
    report = {
        "command": "stats",
        "tool": {"name": "convoscore", "version": __version__},
        "config": {"side": args.side, "normalizer": args.normalizer},
        "scenarios": scenario_blocks,
        "errors": errors,
    }
    _write_reports(args.report_dir, "stats", report, STATS_CSV_COLUMNS, csv_rows)
    _print_summary(report, errors)
    return _exit_code(len(specs), errors, args.skip_errors)


def cmd_sdr(args) -> int:
    specs = load_manifest(args.manifest)
    tasks = [(spec, args.filter_taps) for spec in specs]
    results, errors = _run_sessions(specs, _sdr_session, tasks, args.jobs)
    scenario_blocks = []
    csv_rows = []
    for scenario, members in sorted(_group_by_scenario(specs).items()):
        session_blocks = []
        for spec in sorted(members, key=lambda s: s.session_id):
            outcome = results.get((spec.scenario, spec.session_id))
            if outcome is None:
                continue
            session_blocks.append(outcome)
            for entry in outcome["channels"]:
                csv_rows.append(
                    {
                        "level": "channel", "scenario": scenario,
                        "session_id": spec.session_id,
                        "channel": entry["channel"],
                        "sdr_db": entry["sdr_db"],
                        "sdr_min": "", "sdr_max": "", "sdr_mean": "",
                    }
                )
            csv_rows.append(
                {
                    "level": "session", "scenario": scenario,
                    "session_id": spec.session_id, "channel": "",
                    "sdr_db": "",
                    "sdr_min": outcome["stats"]["minimum"],
                    "sdr_max": outcome["stats"]["maximum"],
                    "sdr_mean": outcome["stats"]["mean"],
                }
            )
        scenario_blocks.append({"name": scenario, "sessions": session_blocks})
    report = {
        "command": "sdr",
        "tool": {"name": "convoscore", "version": __version__},
        "config": {"filter_taps": args.filter_taps},
        "scenarios": scenario_blocks,
        "errors": errors,
    }
    _write_reports(args.report_dir, "sdr", report, SDR_CSV_COLUMNS, csv_rows)
    _print_summary(report, errors)
    return _exit_code(len(specs), errors, args.skip_errors)


def cmd_normalize(args) -> int:
    lst = load_seglst(args.input)
    profile = get_profile(args.normalizer)
    dump_seglst(lst.map_words(profile.apply), args.output)
    return 0


def cmd_condition(args) -> int:
    lst = load_seglst(args.input)
    params = PostprocParams(
        merge_gap=args.merge_gap,
        max_len=args.max_len,
        target_len=args.target_len,
    )
    dump_seglst(condition_segments(lst, params), args.output)
    return 0


def cmd_summ(args) -> int:
    specs = load_manifest(args.manifest)
    collar = args.collar if args.collar is not None else 5.0
    client_config = {
        "kind": args.client,
        "url": args.url,
        "model": args.model,
        "api_key_env": args.api_key_env,
    }
    if args.client == "http" and not (args.url and args.model):
        print("summ: --client http requires --url and --model", file=sys.stderr)
        return 2
    seeds = tuple(range(args.seed + 1, args.seed + 1 + args.seeds))
    log_path = args.log_file
    tasks = [
        (spec, collar, args.normalizer, args.uem, client_config, seeds, log_path)
        for spec in specs
    ]
    results, errors = _run_sessions(specs, _summ_session, tasks, args.jobs)

    scenario_blocks = []
    csv_rows = []
    session_outcomes = []
    for scenario, members in sorted(_group_by_scenario(specs).items()):
        session_blocks = []
        for spec in sorted(members, key=lambda s: s.session_id):
            outcome = results.get((spec.scenario, spec.session_id))
            if outcome is None:
                continue
            session_blocks.append(outcome)
            session_outcomes.append(outcome)
            csv_rows.append(
                {
                    "level": "session", "scenario": scenario,
                    "session_id": spec.session_id,
                    "tcp_wer": outcome["tcp_wer"],
                    "rouge1_mean": outcome["rouge_mean"]["rouge1"],
                    "rouge1_se": outcome["rouge_std_error"]["rouge1"],
                    "rouge2_mean": outcome["rouge_mean"]["rouge2"],
                    "rouge2_se": outcome["rouge_std_error"]["rouge2"],
                    "rougeL_mean": outcome["rouge_mean"]["rougeL"],
                    "rougeL_se": outcome["rouge_std_error"]["rougeL"],
                    "n_pairs": outcome["n_pairs"],
                    "any_truncated": outcome["any_truncated"],
                }
            )
        scenario_blocks.append({"name": scenario, "sessions": session_blocks})

    correlations: dict[str, Any] = {}
    usable = [o for o in session_outcomes if o["tcp_wer"] is not None]
    for key in ("rouge1", "rouge2", "rougeL"):
        if len(usable) >= 3:
            try:
                rep = correlate(
                    [o["tcp_wer"] for o in usable],
                    [o["rouge_mean"][key] for o in usable],
                )
                correlations[key] = {
                    "pearson": rep.pearson, "spearman": rep.spearman, "n": rep.n,
                }
            except ValueError as exc:
                correlations[key] = {"note": str(exc)}
        else:
            correlations[key] = {
                "note": f"need at least 3 sessions, got {len(usable)}"
            }
    report = {
        "command": "summ",
        "tool": {"name": "convoscore", "version": __version__},
        "config": {
            "collar": collar,
            "normalizer": args.normalizer,
            "client": args.client,
            "seeds": list(seeds),
        },
        "scenarios": scenario_blocks,
        "correlations": correlations,
        "errors": errors,
    }
    _write_reports(args.report_dir, "summ", report, SUMM_CSV_COLUMNS, csv_rows)
    _print_summary(report, errors)
    return _exit_code(len(specs), errors, args.skip_errors)


def _print_summary(report: dict, errors: list[dict]) -> None:
    command = report["command"]
    n_sessions = sum(
        len(block["sessions"]) for block in report.get("scenarios", [])
    )
    line = f"{command}: {n_sessions} session(s) scored"
    if command == "score" and report.get("macro_average") is not None:
        line += f", macro {report['macro_average']:.6f}"
    if errors:
        line += f", {len(errors)} error(s)"
    print(line)
    for entry in errors:
        print(
            f"  error {entry['scenario']}/{entry['session_id']}: {entry['error']}",
            file=sys.stderr,
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convoscore",
        description="Scoring and analysis for long-form multi-speaker transcripts",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, normalizer=True):
        p.add_argument("--manifest", required=True, help="manifest JSON path")
        p.add_argument("--report-dir", default=None,
                       help="directory for JSON and CSV reports")
        p.add_argument("--jobs", type=int, default=1,
                       help="session-level worker processes")
        p.add_argument("--uem", default=None,
                       help="UEM file applied to every session")
        p.add_argument("--skip-errors", action="store_true",
                       help="exit 0 when at least one session succeeds")
        if normalizer:
            p.add_argument("--normalizer", choices=available_profiles(),
                           default="c8", help="text normalization profile")

    p_score = sub.add_parser("score", help="transcription / diarization metrics")
    common(p_score)
    p_score.add_argument("--metric", required=True,
                         choices=WER_METRICS + DIAR_METRICS)
    p_score.add_argument("--collar", type=float, default=None,
                         help="seconds; default 5.0 for tcpwer, 0.25 for der/jer")
    p_score.set_defaults(fn=cmd_score)

    p_stats = sub.add_parser("stats", help="occupancy and turn-taking statistics")
    common(p_stats)
    p_stats.add_argument("--side", choices=("reference", "hypothesis"),
                         default="reference")
    p_stats.set_defaults(fn=cmd_stats)

    p_sdr = sub.add_parser("sdr", help="projection SDR per estimate channel")
    common(p_sdr, normalizer=False)
    p_sdr.add_argument("--filter-taps", type=int, default=4096)
    p_sdr.set_defaults(fn=cmd_sdr)

    p_norm = sub.add_parser("normalize", help="normalize a segment list file")
    p_norm.add_argument("--input", required=True)
    p_norm.add_argument("--output", required=True)
    p_norm.add_argument("--normalizer", choices=available_profiles(), default="c8")
    p_norm.set_defaults(fn=cmd_normalize)

    p_cond = sub.add_parser("condition", help="merge / split diarization segments")
    p_cond.add_argument("--input", required=True)
    p_cond.add_argument("--output", required=True)
    p_cond.add_argument("--merge-gap", type=float, default=0.5)
    p_cond.add_argument("--max-len", type=float, default=30.0)
    p_cond.add_argument("--target-len", type=float, default=10.0)
    p_cond.set_defaults(fn=cmd_condition)

    p_summ = sub.add_parser("summ", help="summarization evaluation")
    common(p_summ)
    p_summ.add_argument("--collar", type=float, default=None)
    p_summ.add_argument("--client", choices=("mock", "http"), default="mock")
    p_summ.add_argument("--url", default=None, help="chat-completion endpoint")
    p_summ.add_argument("--model", default=None)
    p_summ.add_argument("--api-key-env", default="CONVOSCORE_API_KEY")
    p_summ.add_argument("--seeds", type=int, default=8,
                        help="summaries per transcript")
    p_summ.add_argument("--seed", type=int, default=0, help="base seed")
    p_summ.add_argument("--log-file", default=None,
                        help="JSONL audit log of generation calls")
    p_summ.set_defaults(fn=cmd_summ)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
