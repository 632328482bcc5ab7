# Turn-taking profile of a synthetic two-person call.
#
# Generates a few minutes of alternating speech with scripted backchannels
# and one genuine interruption, then prints the occupancy split and the
# duration statistics per event kind. Deterministic, no audio involved.

import numpy as np

from convoscore import (
    EventParams,
    SegLst,
    Segment,
    event_duration_stats,
    extract_events,
    occupancy,
)


def build_call(seed: int = 11, minutes: float = 3.0) -> SegLst:
    rng = np.random.default_rng(seed)
    segments = []
    t = 1.0
    speaker = 0
    while t < minutes * 60.0:
        dur = float(rng.uniform(1.5, 9.0))
        who = f"caller_{speaker}"
        segments.append(Segment("call", who, t, t + dur, "speech"))

        other = f"caller_{1 - speaker}"
        roll = rng.uniform()
        if roll < 0.25 and dur > 2.5:
            # short acknowledgement buried inside the turn
            bc_start = t + float(rng.uniform(0.5, dur - 1.2))
            segments.append(
                Segment("call", other, bc_start, bc_start + 0.6, "mhm")
            )
        elif roll < 0.35:
            # the other side barges in before the turn ends and keeps going
            cut = t + dur - float(rng.uniform(0.3, 1.2))
            segments.append(
                Segment("call", other, cut, t + dur + float(rng.uniform(1.0, 4.0)),
                        "hold on")
            )
            t = segments[-1].end_time + float(rng.uniform(0.2, 1.5))
            speaker = 1 - speaker
            continue

        # gap or pause before whoever talks next
        t = t + dur + float(rng.uniform(0.1, 2.2))
        if rng.uniform() < 0.6:
            speaker = 1 - speaker
    return SegLst(segments)


def main() -> None:
    call = build_call()
    span = (0.0, max(seg.end_time for seg in call))
    occ = occupancy(call, span)
    print(f"session span {span[1]:.0f} s, {len(call)} segments")
    print(f"silence {occ.silence_pct:.1f}%  single {occ.single_speaker_pct:.1f}%  "
          f"overlap {occ.overlap_pct:.1f}%")

    events = extract_events(call, EventParams())
    stats = event_duration_stats(events)
    print(f"\n{'kind':<14}{'count':>6}{'mean':>8}{'median':>8}{'p90':>8}")
    for kind in ("turn", "ipu", "pause", "gap", "backchannel", "interruption"):
        if kind not in stats:
            print(f"{kind:<14}{0:>6}")
            continue
        s = stats[kind]
        print(f"{kind:<14}{s.count:>6}{s.mean:>8.2f}{s.median:>8.2f}{s.p90:>8.2f}")

    interruptions = [e for e in events if e.kind == "interruption"]
    if interruptions:
        e = interruptions[0]
        print(f"\nfirst interruption: {e.secondary} over {e.primary} "
              f"at {e.start:.1f} s for {e.duration:.2f} s")


if __name__ == "__main__":
    main()
