"""Batch command line for the vision and speech pipelines.

Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input,
3 parameter or numeric contract violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dtw import DtwMode, classify
from .media_io import (
    AudioSignal,
    CameraRig,
    FormatError,
    TemplateLibrary,
    read_calibration,
    read_pgm,
    read_ppm,
    read_raw_samples,
    read_template_library,
    read_wav,
    write_calibration,
    write_pgm,
    write_ppm,
    write_raw_samples,
    write_template,
    write_template_library,
)
from .nav_policy import command_code, decide
from .obstacle import DetectConfig, RegionSpec, detect_obstacles, mask_to_pgm
from .speech_features import FrontEndConfig, extract_features
from .stereo import (
    MatchParams,
    NavRegion,
    compute_disparity,
    disparity_to_pgm,
    nearest_obstacle_distance,
    rgb_to_gray,
)
from .synth import VOCABULARY, Obstacle, SceneSpec, render_stereo_scene, synth_word

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_CONTRACT = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers ----------------------------------------------------------------

def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _out(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _existing(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def _write_manifest(args, inputs, default_dir):
    target = Path(args.manifest) if args.manifest else Path(default_dir) / "run_manifest.json"
    params = {
        key: (str(value) if isinstance(value, (Path, RegionSpec, DtwMode)) else value)
        for key, value in sorted(vars(args).items())
        if key not in ("func", "manifest", "config")
    }
    manifest = {
        "command": args.command,
        "version": __version__,
        "parameters": params,
        "inputs": {str(p): _digest(p) for p in inputs},
    }
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit(args, text, payload):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _detect_config(args) -> DetectConfig:
    return DetectConfig(median_window=args.median_window,
                        threshold_divisor=args.threshold_divisor,
                        region=args.region)


def _match_params(args) -> MatchParams:
    return MatchParams(window_half=args.window_half, d_min=args.d_min,
                       d_max=args.d_max, metric=args.metric)


def _front_end(args) -> FrontEndConfig:
    return FrontEndConfig(sample_rate=args.sample_rate, fft_len=args.fft_len,
                          frame_shift=args.frame_shift, mel_channels=args.mel_channels,
                          preemphasis=args.preemphasis, features=args.features,
                          mfcc_count=args.mfcc_count)


def _read_audio(path, sample_rate, raw=False) -> AudioSignal:
    path = _existing(path)
    if not raw and path.suffix.lower() == ".wav":
        return read_wav(path)
    return read_raw_samples(path, sample_rate)


def _fmt_mm(value: float) -> str:
    return f"{value:g}"


def _navigate_frame(args, left_path, right_path, rig):
    left = read_ppm(_existing(left_path))
    right = read_ppm(_existing(right_path))
    if left.shape != right.shape:
        raise ValueError(f"image sizes differ: {left.shape[:2]} vs {right.shape[:2]}")
    mask = detect_obstacles(left, config=_detect_config(args))
    params = _match_params(args)
    disparity = compute_disparity(rgb_to_gray(left), rgb_to_gray(right), mask,
                                  NavRegion(), params)
    distance = nearest_obstacle_distance(disparity, rig, args.support_threshold,
                                         params.d_max)
    decision = decide(distance, mask)
    return mask, disparity, decision


def _decision_payload(decision):
    return {
        "D": decision.distance_mm,
        "action": str(decision.action),
        "code": command_code(decision.action),
        "side_means": list(decision.side_means),
    }


def _decision_line(decision):
    return (f"D={_fmt_mm(decision.distance_mm)} action={decision.action} "
            f"code={command_code(decision.action)}")


# -- subcommands ------------------------------------------------------------

def cmd_detect(args):
    image = read_ppm(_existing(args.image))
    mask = detect_obstacles(image, config=_detect_config(args))
    write_pgm(_out(args.out), mask_to_pgm(mask))
    _write_manifest(args, [args.image], Path(args.out).parent)
    _emit(args, f"obstacle_pixels={int(mask.sum())} region={args.region}",
          {"obstacle_pixels": int(mask.sum()), "region": str(args.region)})


def cmd_disparity(args):
    left = read_ppm(_existing(args.left))
    right = read_ppm(_existing(args.right))
    if left.shape != right.shape:
        raise ValueError(f"image sizes differ: {left.shape[:2]} vs {right.shape[:2]}")
    if args.mask:
        mask = (read_pgm(_existing(args.mask)) > 127).astype(np.uint8)
    else:
        mask = detect_obstacles(left, config=_detect_config(args))
    params = _match_params(args)
    disparity = compute_disparity(rgb_to_gray(left), rgb_to_gray(right), mask,
                                  NavRegion(), params)
    write_pgm(_out(args.out), disparity_to_pgm(disparity, params.d_max))
    inputs = [args.left, args.right] + ([args.mask] if args.mask else [])
    _write_manifest(args, inputs, Path(args.out).parent)
    values, counts = np.unique(disparity[disparity > 0], return_counts=True)
    histogram = {int(v): int(c) for v, c in zip(values, counts)}
    _emit(args, " ".join(f"d{v}={c}" for v, c in histogram.items()) or "no matches",
          {"histogram": histogram})


def cmd_navigate(args):
    rig = read_calibration(_existing(args.calibration))
    mask, disparity, decision = _navigate_frame(args, args.left, args.right, rig)
    if args.mask_out:
        write_pgm(_out(args.mask_out), mask_to_pgm(mask))
    if args.disp_out:
        write_pgm(_out(args.disp_out), disparity_to_pgm(disparity, args.d_max))
    out_dir = Path(args.mask_out or args.disp_out or ".").parent
    _write_manifest(args, [args.left, args.right, args.calibration], out_dir)
    _emit(args, _decision_line(decision), _decision_payload(decision))


def _frame_pairs(directory):
    pattern = re.compile(r"left_?(\d+)\.ppm$")
    pairs = []
    for path in sorted(Path(directory).glob("left*.ppm")):
        match = pattern.search(path.name)
        if not match:
            continue
        number = match.group(1)
        candidates = list(Path(directory).glob(f"right*{number}.ppm"))
        right = next((c for c in candidates
                      if re.fullmatch(rf"right_?{number}\.ppm", c.name)), None)
        if right is None:
            raise FileNotFoundError(f"no right frame for {path}")
        pairs.append((int(number), path, right))
    pairs.sort()
    return pairs


def cmd_pipeline(args):
    frames = Path(args.frames)
    if not frames.is_dir():
        raise FileNotFoundError(f"frame directory not found: {frames}")
    rig = read_calibration(_existing(args.calibration))
    pairs = _frame_pairs(frames)
    if not pairs:
        raise FileNotFoundError(f"no left_<n>.ppm / right_<n>.ppm pairs in {frames}")
    inputs = [args.calibration]
    for number, left, right in pairs:
        mask, disparity, decision = _navigate_frame(args, left, right, rig)
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_pgm(out / f"mask_{number:03d}.pgm", mask_to_pgm(mask))
            write_pgm(out / f"disp_{number:03d}.pgm", disparity_to_pgm(disparity, args.d_max))
        inputs += [left, right]
        payload = dict(_decision_payload(decision), frame=number)
        _emit(args, f"frame={number} " + _decision_line(decision), payload)
    _write_manifest(args, inputs, args.out_dir or ".")


def cmd_features(args):
    config = _front_end(args)
    signal = _read_audio(args.input, args.sample_rate, args.raw)
    features = extract_features(signal, config)
    write_template(_out(args.out), features)
    _write_manifest(args, [args.input], Path(args.out).parent)
    _emit(args, f"channels={features.shape[0]} frames={features.shape[1]}",
          {"channels": features.shape[0], "frames": features.shape[1]})


def _parse_word(spec):
    label, sep, path = spec.partition("=")
    if not sep or not label or not path:
        raise UsageError(f"--word expects LABEL=PATH, got {spec!r}")
    return label, path


def cmd_train(args):
    config = _front_end(args)
    words = [_parse_word(spec) for spec in args.word]
    library = TemplateLibrary()
    for label, path in words:
        library.add(label, extract_features(_read_audio(path, args.sample_rate), config))
    write_template_library(args.out_dir, library)
    _write_manifest(args, [path for _, path in words], args.out_dir)
    _emit(args, f"templates={len(library)} labels={','.join(library.labels)}",
          {"templates": len(library), "labels": library.labels})


def cmd_recognize(args):
    config = _front_end(args)
    library = read_template_library(_existing(args.templates))
    if not len(library):
        raise FormatError(f"{args.templates}: template directory is empty")
    features = extract_features(_read_audio(args.input, args.sample_rate), config)
    if features.shape[0] != library.channels:
        raise ValueError(
            f"templates have {library.channels} channels, front end produces "
            f"{features.shape[0]}"
        )
    label, distance, distances = classify(features, library, DtwMode(args.mode))
    _write_manifest(args, [args.input] + [Path(args.templates) / f"{l}.mel"
                                          for l in library.labels], ".")
    code = command_code(label)
    if args.json:
        print(json.dumps({"label": label, "distance": distance, "code": code,
                          "distances": dict(distances)}, sort_keys=True))
        return
    print(f"{label} {distance!r}")
    for other, d in distances:
        print(f"  {other} {d!r}")
    print(f"code={code}")


def cmd_synth_scene(args):
    rig = (read_calibration(_existing(args.calibration)) if args.calibration
           else CameraRig(args.focal_px, args.baseline_mm))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obstacles = []
    for k, d in enumerate(args.disparity or []):
        if d < 1:
            raise ValueError("obstacle disparity must be >= 1")
        depth = rig.focal_px * rig.baseline_mm / d
        top = args.top + 4 * k
        obstacles.append(Obstacle((200, 40, 40), top, args.obstacle_left + 70 * k,
                                  args.obstacle_height, args.obstacle_width, depth))
    spec = SceneSpec(rig, obstacles=tuple(obstacles), seed=args.seed, d_max=args.d_max)
    scene = render_stereo_scene(spec)
    write_ppm(out / "left.ppm", scene.left)
    write_ppm(out / "right.ppm", scene.right)
    write_pgm(out / "truth.pgm", disparity_to_pgm(scene.disparity, args.d_max))
    write_calibration(out / "calib.txt", rig)
    _write_manifest(args, [], out)
    depths = sorted({float(v) for v in scene.depth[np.isfinite(scene.depth)]})
    _emit(args, "depths_mm=" + (",".join(_fmt_mm(v) for v in depths) or "none"),
          {"depths_mm": depths})


def cmd_synth_word(args):
    signal = synth_word(args.label, args.seed, FrontEndConfig(sample_rate=args.sample_rate))
    write_raw_samples(_out(args.out), signal)
    _write_manifest(args, [], Path(args.out).parent)
    _emit(args, f"samples={len(signal)} sample_rate={signal.sample_rate}",
          {"samples": len(signal), "sample_rate": signal.sample_rate})


# -- parser -----------------------------------------------------------------

def _add_common(p):
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--config", help="JSON file of parameter defaults")
    p.add_argument("--manifest", help="where to write the run manifest")


def _add_detect_opts(p):
    p.add_argument("--region", type=RegionSpec.parse, default=RegionSpec(),
                   help="reference area, rect:r0,r1,c0,c1 or trap:r0,r1,c0,c1,widen")
    p.add_argument("--median-window", type=int, default=9)
    p.add_argument("--threshold-divisor", type=float, default=50.0)


def _add_match_opts(p):
    p.add_argument("--window-half", type=int, default=4)
    p.add_argument("--d-min", type=int, default=0)
    p.add_argument("--d-max", type=int, default=25)
    p.add_argument("--metric", choices=("ncc", "sad"), default="ncc")
    p.add_argument("--support-threshold", type=float, default=None,
                   help="pixels needed to accept a disparity (default 3*d-max)")


def _add_front_end_opts(p):
    p.add_argument("--sample-rate", type=int, default=8000)
    p.add_argument("--fft-len", type=int, default=256)
    p.add_argument("--frame-shift", type=int, default=80)
    p.add_argument("--mel-channels", type=int, default=22)
    p.add_argument("--mfcc-count", type=int, default=13)
    p.add_argument("--features", choices=("logmel", "mfcc"), default="logmel")
    p.add_argument("--preemphasis", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="navperception", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="obstacle mask from one colour frame")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    _add_detect_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("disparity", help="disparity map over the navigation region")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--mask", help="obstacle mask PGM; computed from --left if omitted")
    p.add_argument("--out", required=True)
    _add_detect_opts(p)
    _add_match_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_disparity)

    p = sub.add_parser("navigate", help="distance and command for one stereo pair")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--mask-out")
    p.add_argument("--disp-out")
    _add_detect_opts(p)
    _add_match_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_navigate)

    p = sub.add_parser("pipeline", help="navigate every left_<n>/right_<n> pair in a directory")
    p.add_argument("--frames", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--out-dir")
    _add_detect_opts(p)
    _add_match_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("features", help="feature matrix of one utterance")
    p.add_argument("--input", required=True, help="WAV file, or text samples with --raw")
    p.add_argument("--raw", action="store_true", help="input is one sample per line")
    p.add_argument("--out", required=True)
    _add_front_end_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="build a template directory")
    p.add_argument("--word", action="append", required=True, metavar="LABEL=PATH")
    p.add_argument("--out-dir", required=True)
    _add_front_end_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="classify one utterance against templates")
    p.add_argument("--input", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--mode", choices=[m.value for m in DtwMode], default="symmetric")
    _add_front_end_opts(p)
    _add_common(p)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("synth", help="synthetic stereo scenes and words")
    synth = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    s = synth.add_parser("scene")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--disparity", type=int, action="append",
                   help="one red obstacle per value, placed at depth f*T/d")
    s.add_argument("--calibration")
    s.add_argument("--focal-px", type=float, default=300.0)
    s.add_argument("--baseline-mm", type=float, default=40.85)
    s.add_argument("--top", type=int, default=110)
    s.add_argument("--obstacle-left", type=int, default=130)
    s.add_argument("--obstacle-height", type=int, default=66)
    s.add_argument("--obstacle-width", type=int, default=61)
    s.add_argument("--d-max", type=int, default=25)
    s.add_argument("--seed", type=int, default=0)
    _add_common(s)
    s.set_defaults(func=cmd_synth_scene)
    s = synth.add_parser("word")
    s.add_argument("--label", required=True, choices=VOCABULARY)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sample-rate", type=int, default=8000)
    s.add_argument("--out", required=True)
    _add_common(s)
    s.set_defaults(func=cmd_synth_word)
    return parser


def _load_config(parser, argv):
    """Apply ``--config`` JSON as defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = _existing(known.config)
    try:
        values = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(values, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    values = {k.replace("-", "_"): v for k, v in values.items()}
    if "region" in values:
        values["region"] = RegionSpec.parse(values["region"])
    _set_defaults_everywhere(parser, values)


def _set_defaults_everywhere(parser, values):
    parser.set_defaults(**values)
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                _set_defaults_everywhere(child, values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _load_config(parser, argv)
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"navperception: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, FormatError, OSError) as exc:
        print(f"navperception: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError) as exc:
        print(f"navperception: error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
