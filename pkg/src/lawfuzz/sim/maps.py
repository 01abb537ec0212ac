"""Bundled maps and the map-directory lookup.

The default map is a two-way east-west main road with a side road joining
from the south (a T-junction). Traffic keeps right, junction connector lanes
carry lane number 0, and every approach has a stopline followed by a crosswalk.
"""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path

from ..world import MapContext

MAP_DIR_ENV = "LAWFUZZ_MAP_DIR"
BUNDLED_DIR = Path(__file__).parent / "maps"

HALF = 3.5  # junction half-size (two 3.5 m lanes)
LANE_OFF = 1.75
STOPLINE_SETBACK = 9.0  # distance of the stopline from the junction centre
CROSSWALK = (4.0, 8.0)  # crosswalk band, distance from the junction centre
MAIN_LEN = 120.0
SIDE_LEN = 80.0


def _turn(p0, p1, n=12):
    """Quarter-ish curve from p0 to p1 as a quadratic Bezier through the corner point."""
    # control point where the entry and exit directions meet
    if abs(p0[1]) == LANE_OFF and abs(p0[0]) == HALF:
        ctrl = (p1[0], p0[1])
    else:
        ctrl = (p0[0], p1[1])
    pts = []
    for k in range(n + 1):
        u = k / n
        x = (1 - u) ** 2 * p0[0] + 2 * u * (1 - u) * ctrl[0] + u * u * p1[0]
        y = (1 - u) ** 2 * p0[1] + 2 * u * (1 - u) * ctrl[1] + u * u * p1[1]
        pts.append([round(x, 4), round(y, 4)])
    return pts


def t_junction(signalized: bool = True) -> dict:
    h, o = HALF, LANE_OFF

    def lane(id, number, pts, successors=(), turn="forward", upper=50.0, direction="forward"):
        return {
            "id": id,
            "number": number,
            "side": "right",
            "direction": direction,
            "turn": turn,
            "width": 3.5,
            "centerline": pts,
            "speed_limit": {"lower": 0.0, "upper": upper},
            "successors": list(successors),
        }

    lanes = [
        lane("E_in", 1, [[-MAIN_LEN, -o], [-h, -o]], ["J_E_E", "J_E_S"], direction="forwardOrRight"),
        lane("E_out", 1, [[h, -o], [MAIN_LEN + 80.0, -o]]),
        lane("W_in", 1, [[MAIN_LEN, o], [h, o]], ["J_W_W", "J_W_S"], direction="forwardOrLeft"),
        lane("W_out", 1, [[-h, o], [-MAIN_LEN - 80.0, o]]),
        lane("S_in", 1, [[o, -SIDE_LEN], [o, -h]], ["J_S_E", "J_S_W"], upper=30.0, direction="forward"),
        lane("S_out", 1, [[-o, -h], [-o, -SIDE_LEN - 40.0]], upper=30.0),
        lane("J_E_E", 0, [[-h, -o], [h, -o]], ["E_out"]),
        lane("J_E_S", 0, _turn((-h, -o), (-o, -h)), ["S_out"], turn="right"),
        lane("J_W_W", 0, [[h, o], [-h, o]], ["W_out"]),
        lane("J_W_S", 0, _turn((h, o), (-o, -h)), ["S_out"], turn="left"),
        lane("J_S_E", 0, _turn((o, -h), (h, -o)), ["E_out"], turn="right"),
        lane("J_S_W", 0, _turn((o, -h), (-h, o)), ["W_out"], turn="left"),
    ]
    s, (c0, c1) = STOPLINE_SETBACK, CROSSWALK
    data = {
        "name": "t_junction" if signalized else "t_junction_unsignalized",
        "lanes": lanes,
        "junctions": [[[-h, -h], [h, -h], [h, h], [-h, h]]],
        "stoplines": [
            {"id": "SL_E", "lane": "E_in", "segment": [[-s, -h], [-s, 0.0]]},
            {"id": "SL_W", "lane": "W_in", "segment": [[s, 0.0], [s, h]]},
            {"id": "SL_S", "lane": "S_in", "segment": [[0.0, -s], [h, -s]]},
        ],
        "crosswalks": [
            [[-c1, -h], [-c0, -h], [-c0, h], [-c1, h]],
            [[c0, -h], [c1, -h], [c1, h], [c0, h]],
            [[-h, -c1], [h, -c1], [h, -c0], [-h, -c0]],
        ],
        "signal_heads": [],
    }
    if signalized:
        data["signal_heads"] = [
            {"id": "H_E", "kind": "Common", "governs_lane": "E_in", "group": "main"},
            {"id": "H_W", "kind": "Common", "governs_lane": "W_in", "group": "main"},
            {"id": "H_S", "kind": "Common", "governs_lane": "S_in", "group": "side"},
        ]
    return data


def map_dirs() -> list[Path]:
    extra = os.environ.get(MAP_DIR_ENV)
    return ([Path(extra)] if extra else []) + [BUNDLED_DIR]


@lru_cache(maxsize=None)
def _load(path: str) -> MapContext:
    return MapContext.load(path)


def load_map(ref: str = "t_junction") -> MapContext:
    """Resolve a map by file path or by bare name in the map directories."""
    p = Path(ref)
    if p.suffix == ".json" and p.exists():
        return _load(str(p.resolve()))
    for d in map_dirs():
        cand = d / f"{ref}.json"
        if cand.exists():
            return _load(str(cand.resolve()))
    raise FileNotFoundError(f"map {ref!r} not found in {[str(d) for d in map_dirs()]}")


if __name__ == "__main__":
    import json

    for signalized in (True, False):
        m = t_junction(signalized)
        (BUNDLED_DIR / f"{m['name']}.json").write_text(json.dumps(m, indent=1) + "\n")
