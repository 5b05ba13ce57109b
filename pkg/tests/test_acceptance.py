"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import colorsys
import itertools
import math
import statistics
import time

import numpy as np
import pytest
from scipy import ndimage

from navperception.cli import main
from navperception.dtw import DtwMode, classify, dtw_distance
from navperception.media_io import AudioSignal, CameraRig
from navperception.nav_policy import Action, decide
from navperception.obstacle import BIN_EDGES, detect_obstacles
from navperception.speech_features import (
    cepstral_smooth,
    cepstrum,
    mel_filter_matrix,
    mel_of_freq,
    mel_spectrogram,
)
from navperception.stereo import (
    compute_disparity,
    nearest_obstacle_distance,
    rgb_to_gray,
)
from navperception.synth import VOCABULARY, Obstacle, SceneSpec, render_stereo_scene, synth_word

pytestmark = pytest.mark.acceptance

RIG = CameraRig(focal_px=300.0, baseline_mm=40.85, principal=(160.0, 120.0))
FT = RIG.focal_px * RIG.baseline_mm


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


def _navigate(left, right):
    mask = detect_obstacles(left)
    disp = compute_disparity(rgb_to_gray(left), rgb_to_gray(right), mask)
    distance = nearest_obstacle_distance(disp, RIG)
    return mask, disp, distance, decide(distance, mask)


def _single_obstacle_scene(d, seed=0):
    ob = Obstacle((200, 40, 40), 110, 130, 66, 61, FT / d)
    return render_stereo_scene(SceneSpec(RIG, obstacles=(ob,), seed=seed))


# 1 ------------------------------------------------------------------------

def test_triangulation_exactness(capsys):
    rows, ok = [], True
    for d in (5, 10, 15, 20, 25):
        scene = _single_obstacle_scene(d)
        t0 = time.perf_counter()
        _, disp, distance, _ = _navigate(scene.left, scene.right)
        elapsed = time.perf_counter() - t0
        found = disp[disp > 0]
        disp_error = int(np.abs(found - d).max()) if found.size else None
        depth_error = abs(distance - FT / d)
        ok &= disp_error == 0 and depth_error < 0.01 and elapsed < 5
        rows.append(f"d={d} Z={distance:.3f} dz={depth_error:.2e} t={elapsed:.2f}s")
    _report(capsys, 1, ok, "; ".join(rows))
    assert ok


# 2 ------------------------------------------------------------------------

def _bin_of(x):
    return int(np.searchsorted(BIN_EDGES, x, side="right"))


def _color(h, s, v):
    return tuple(int(round(255 * c)) for c in colorsys.hsv_to_rgb(h, s, v))


def _random_mask_scene(seed):
    rng = np.random.default_rng(seed)
    centres = [0.1, 0.3, 0.5, 0.7, 0.9]
    floor_bin = int(rng.integers(5))
    floor = _color(centres[floor_bin], rng.uniform(0.5, 0.8), rng.uniform(0.35, 0.55))
    far_bins = [b for b in range(5) if abs(b - floor_bin) >= 2]
    obstacles = []
    for _ in range(int(rng.integers(1, 4))):
        color = _color(centres[int(rng.choice(far_bins))], rng.uniform(0.5, 0.9),
                       rng.uniform(0.45, 0.85))
        h, w = int(rng.integers(25, 60)), int(rng.integers(25, 80))
        top = int(rng.integers(5, 170 - h))
        left = int(rng.integers(5, 315 - w))
        obstacles.append(Obstacle(color, top, left, h, w, FT / int(rng.integers(1, 26))))
    spec = SceneSpec(RIG, floor_color=floor, obstacles=tuple(obstacles), seed=seed)
    return render_stereo_scene(spec)


def test_obstacle_mask_quality(capsys):
    worst_p, worst_r = 1.0, 1.0
    square = np.ones((3, 3), dtype=bool)
    for seed in range(20):
        scene = _random_mask_scene(seed)
        truth = scene.obstacle_mask.astype(bool)
        band = (ndimage.binary_dilation(truth, square, iterations=4)
                & ~ndimage.binary_erosion(truth, square, iterations=4))
        keep = ~band
        mask = detect_obstacles(scene.left).astype(bool)
        tp = np.count_nonzero(mask & truth & keep)
        fp = np.count_nonzero(mask & ~truth & keep)
        fn = np.count_nonzero(~mask & truth & keep)
        worst_p = min(worst_p, tp / (tp + fp) if tp + fp else 1.0)
        worst_r = min(worst_r, tp / (tp + fn) if tp + fn else 1.0)
    ok = worst_p >= 0.99 and worst_r >= 0.99
    _report(capsys, 2, ok, f"20 scenes, worst precision {worst_p:.4f}, worst recall {worst_r:.4f}")
    assert ok


# 3 ------------------------------------------------------------------------

def _float_gray(image):
    rgb = image.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def test_ncc_illumination_robustness(capsys):
    changed, total = 0, 0
    for d in (5, 10, 15, 20, 25):
        scene = _single_obstacle_scene(d, seed=d)
        mask = detect_obstacles(scene.left)
        left = rgb_to_gray(scene.left)
        base = compute_disparity(left, np.floor(_float_gray(scene.right) + 0.5), mask)
        bright = compute_disparity(left, np.floor(1.7 * _float_gray(scene.right) + 0.5), mask)
        changed += int(np.count_nonzero(base != bright))
        total += int(np.count_nonzero(base))
    ok = changed == 0
    _report(capsys, 3, ok, f"{changed} of {total} matched pixels changed under 1.7x gain")
    assert ok


# 4 ------------------------------------------------------------------------

def test_control_law_table(capsys):
    mask = np.zeros((240, 320), dtype=np.uint8)
    mask[150:211, 214:] = 1
    table = {599: "Stop", 600: "Stop", 601: "Turn", 750: "Turn", 751: "GoStraight",
             5000: "GoStraight"}
    got = {d: str(decide(d, mask).action) for d in table}
    table_ok = all(got[d].startswith(v) for d, v in table.items())
    mirror_ok = (decide(700, mask).action is Action.TurnLeft
                 and decide(700, mask[:, ::-1]).action is Action.TurnRight)
    rng = np.random.default_rng(4)
    for _ in range(200):
        m = np.kron(rng.integers(0, 2, (24, 33)), np.ones((10, 10), dtype=np.uint8))
        a, b = decide(700, m).action, decide(700, m[:, ::-1]).action
        left, right = decide(700, m).side_means
        expect = {Action.TurnRight} if left == right else {Action.TurnLeft, Action.TurnRight}
        mirror_ok &= {a, b} == expect
    ok = table_ok and mirror_ok
    _report(capsys, 4, ok, f"table {got}; mirror {'ok' if mirror_ok else 'broken'}")
    assert ok


# 5 ------------------------------------------------------------------------

def test_front_end_invariants(capsys):
    checks = {}
    rows = mel_filter_matrix().sum(axis=1)
    checks["rows sum to 1"] = (bool(np.all(np.abs(rows - 1) <= 1e-9)),
                               f"max dev {np.abs(rows - 1).max():.1e}")
    m1000 = mel_of_freq(1000)
    checks["mel(1000)=1000.02+-0.01"] = (abs(m1000 - 1000.02) <= 0.01, f"got {m1000:.6f}")
    exact = True
    for word in VOCABULARY:
        sig = synth_word(word)
        half = AudioSignal(sig.sample_rate, 0.5 * sig.samples)
        exact &= bool(np.array_equal(mel_spectrogram(sig), mel_spectrogram(half)))
    checks["amplitude invariance exact"] = (exact, "x0.5 on all six words")
    n = np.arange(512)
    envelope = 3.0 + 2.0 * np.cos(2 * np.pi * n / 512)
    ripple = np.cos(2 * np.pi * n / 32)
    c = cepstrum(envelope + ripple)
    peak = int(np.argmax(np.abs(c[2:257]))) + 2
    residual = np.abs(cepstral_smooth(envelope + ripple, 16) - envelope).max()
    checks["ripple peak d=16"] = (peak == 16, f"peak {peak}")
    checks["lifter < 1%"] = (residual < 0.01, f"residual {residual:.1e}")
    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{k} {'ok' if v[0] else 'FAILED'} ({v[1]})" for k, v in checks.items())
    _report(capsys, 5, ok, detail)
    assert ok


# 6 ------------------------------------------------------------------------

def _brute_dtw(w, x, mode):
    tw, tx = w.shape[1], x.shape[1]
    dist = [[math.sqrt(sum((w[c, i] - x[c, j]) ** 2 for c in range(w.shape[0])))
             for j in range(tx)] for i in range(tw)]
    if mode is DtwMode.SYMMETRIC:
        steps = [(0, 1, 1.0), (1, 1, 2.0), (1, 0, 1.0)]
    else:
        steps = [(0, 1, 1.0), (1, 1, 1.0), (2, 1, 1.0)]
    best = math.inf

    def walk(i, j, cost):
        nonlocal best
        if (i, j) == (tw - 1, tx - 1):
            best = min(best, cost)
            return
        for di, dj, wt in steps:
            ni, nj = i + di, j + dj
            if ni < tw and nj < tx:
                walk(ni, nj, cost + wt * dist[ni][nj])

    walk(0, 0, dist[0][0])
    return best


def test_dtw_correctness(capsys):
    rng = np.random.default_rng(2024)
    worst, instances = 0.0, 0
    for _ in range(200):
        dims = int(rng.integers(1, 4))
        w = rng.normal(size=(dims, int(rng.integers(1, 7))))
        x = rng.normal(size=(dims, int(rng.integers(1, 7))))
        for mode in DtwMode:
            got = dtw_distance(w, x, mode).distance
            want = _brute_dtw(w, x, mode)
            instances += 1
            if math.isinf(want) or math.isinf(got):
                worst = max(worst, 0.0 if got == want else math.inf)
            else:
                worst = max(worst, abs(got - want))
    hand = dtw_distance(np.array([[0.0, 1, 2]]), np.array([[0.0, 1, 3]])).distance
    ok = worst <= 1e-9 and hand == 2
    _report(capsys, 6, ok, f"{instances} instances, max |error| {worst:.1e}; hand example {hand}")
    assert ok


# 7 ------------------------------------------------------------------------

def test_recognizer(capsys):
    library = [(w, mel_spectrogram(synth_word(w, seed=0))) for w in VOCABULARY]
    self_ok = all(classify(t, library)[:2] == (w, 0.0) for w, t in library)
    margin = min(dtw_distance(a, b).distance
                 for (la, a), (lb, b) in itertools.permutations(library, 2))
    rng = np.random.default_rng(77)
    correct, worst_perturbation = 0, 0.0
    for trial in range(100):
        index = trial % 6
        word = VOCABULARY[index]
        clean = synth_word(word, seed=int(rng.integers(1, 10_000))).samples
        noisy = rng.uniform(0.2, 1.0) * clean + rng.normal(0, rng.uniform(0.001, 0.01), clean.size)
        probe = mel_spectrogram(np.clip(noisy, -1, 1))
        label, _, distances = classify(probe, library)
        worst_perturbation = max(worst_perturbation, distances[index][1])
        correct += label == word
    within = worst_perturbation < margin / 2
    ok = self_ok and within and correct == 100
    _report(capsys, 7, ok, f"self 6/6={self_ok}; margin {margin:.1f}; worst perturbation "
                           f"{worst_perturbation:.1f} (< margin/2: {within}); {correct}/100 correct")
    assert ok


# 8 ------------------------------------------------------------------------

def test_throughput(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "scene", "--out-dir", "s", "--disparity", "15"]) == 0
    times = []
    for _ in range(3):
        t0 = time.perf_counter()
        code = main(["navigate", "--left", "s/left.ppm", "--right", "s/right.ppm",
                     "--calibration", "s/calib.txt", "--mask-out", "o/mask.pgm",
                     "--disp-out", "o/disp.pgm"])
        times.append(time.perf_counter() - t0)
        assert code == 0
    capsys.readouterr()
    t = statistics.median(times)
    ok = t <= 1.0
    _report(capsys, 8, ok, f"navigate on 320x240 median {t:.3f} s over 3 runs")
    assert ok
