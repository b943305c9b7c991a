"""
Report generation module
"""

import json
import math
from datetime import datetime
from pathlib import Path

import numpy as np

from config import EXPERIMENTS, FAMILIES, OUTPUT_DIR, SUMMARY_OUTPUT, Display


def to_plain(value):
    """numpy scalars and arrays to python, inf/nan to strings, complex to [re, im]"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(float(value.real)), to_plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def write_json(data, filename):
    """Deterministic JSON: sorted keys, no timestamps, trailing newline"""
    with open(filename, "w", encoding="utf-8", newline="\n") as f:
        json.dump(to_plain(data), f, indent=2, sort_keys=True)
        f.write("\n")


def write_csv(df, filename):
    df.to_csv(filename, index=False, lineterminator="\n", float_format=Display.CSV_FLOAT_FORMAT)


def _fmt(value, decimals=Display.VALUE_DECIMALS):
    if value is None:
        return "-"
    try:
        value = float(value)
    except (TypeError, ValueError):
        return str(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{decimals}g}"


def _icon(ok):
    if ok is None:
        return "➖"
    return "✅" if ok else "❌"


class ReportGenerator:
    """Console and file output for lab runs"""

    @staticmethod
    def print_header(title):
        """Print report header"""
        print("\n" + "=" * Display.CONSOLE_WIDTH)
        print(f"🔬 FOCK SPACE LOCALIZATION LAB - {title.upper()}")
        print(f"🕐 {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        print("=" * Display.CONSOLE_WIDTH)

    @staticmethod
    def print_step(number, title):
        print("\n" + "=" * Display.CONSOLE_WIDTH)
        print(f"📊 STEP {number}: {title.upper()}")
        print("=" * Display.CONSOLE_WIDTH)

    @staticmethod
    def print_pairing(label, z, w, value):
        """Print one kernel pairing"""
        print(f"\n   Operator:   {label}")
        print(f"   z = {z}   w = {w}")
        print(f"   <T k_z, k_w> = {value['re']:+.{Display.VALUE_DECIMALS}g} "
              f"{value['im']:+.{Display.VALUE_DECIMALS}g}i")
        print(f"   magnitude:  {_fmt(value['magnitude'])}  (log {_fmt(value['log_magnitude'])})")
        print(f"   method:     {value['method']}, est. rel err {value['est_rel_err']:.1e}")

    @staticmethod
    def print_berezin(label, z, value):
        print(f"\n   Operator:   {label}")
        print(f"   z = {z}")
        print(f"   Berezin transform = {value.real:+.{Display.VALUE_DECIMALS}g} "
              f"{value.imag:+.{Display.VALUE_DECIMALS}g}i   |.| = {_fmt(abs(value))}")

    @staticmethod
    def print_report_summary(report):
        """Print the verdicts of a localization report"""
        op = report.operator
        print(f"\n🧮 OPERATOR: {op.label()}  (n = {op.n}, hash {op.param_hash()})")
        print(f"   {FAMILIES.get(op.family, op.family)}")

        print(f"\n📈 P-LOCALIZATION SUPREMA:")
        for result in report.p_results:
            print(f"   {_icon(result.bounded)} p = {result.p:<6g} {result.classification:13s} "
                  f"sup ~ {_fmt(result.estimate)}")

        print(f"\n🌊 WEAK LOCALIZATION: {report.wl_verdict}")
        if report.wl is not None:
            for r, t, t_adj in zip(report.wl.radii, report.wl.tail_curve, report.wl.adjoint_curve):
                print(f"   r = {r:<5g} tail(T) = {_fmt(t):>12s}   tail(T*) = {_fmt(t_adj):>12s}")

        for name, fit in (("XZ DECAY FIT", report.xz_fit), ("GAUSSIAN DECAY FIT", report.sl_fit)):
            if fit is None:
                print(f"\n📉 {name}: not available")
                continue
            print(f"\n📉 {name}: {_icon(fit.passed)} {fit.verdict}  "
                  f"exponent {_fmt(fit.exponent, Display.EXPONENT_DECIMALS)}  "
                  f"residual {_fmt(fit.residual, Display.EXPONENT_DECIMALS)}")

        if report.berezin_probe is not None:
            print(f"\n🎯 BEREZIN PROBE: {report.berezin_probe.verdict}")
        print(f"\n🏁 VERDICTS:")
        print(f"   {_icon(report.strongly_localized)} strongly localized")
        print(f"   {_icon(report.sufficiently_localized)} sufficiently localized")
        print(f"   {_icon(report.xz_localized)} XZ-sufficiently localized")
        print(f"   {_icon(report.wl_verdict == 'WL')} weakly localized ({report.wl_verdict})")
        print(f"\n🔗 INCLUSION CHAIN: {_icon(report.chain_consistent)} "
              f"{'consistent' if report.chain_consistent else 'VIOLATED'}")

        if report.notes:
            print(f"\n💡 NOTES:")
            for note in report.notes:
                print(f"   • {note}")

    @staticmethod
    def print_experiment_result(result):
        """Print experiment verdict and its checks"""
        print(f"\n🧪 {result.name}")
        print(f"   {result.anchor}")
        print(f"   Rule: {result.rule}")

        checks = [row for row in result.rows if row["ok"] is not None]
        failed = [row for row in checks if not row["ok"]]
        print(f"\n   Rows: {len(result.rows)}   Checks: {len(checks)}   Failed: {len(failed)}")
        for row in failed[:Display.FAILED_ROWS_SHOWN]:
            print(f"   ❌ [{row['section']}] {row['case']} @ {row['grid_value']}: "
                  f"{_fmt(row['value'])} vs {_fmt(row['reference'])} ({row['outcome']})")
        if len(failed) > Display.FAILED_ROWS_SHOWN:
            print(f"   ... {len(failed) - Display.FAILED_ROWS_SHOWN} more")

        for note in result.notes:
            print(f"   💡 {note}")

        verdict = "exploratory" if result.passed is None else ("PASS" if result.passed else "FAIL")
        print(f"\n   {_icon(result.passed)} Verdict: {verdict}   ({result.runtime:.1f}s)")

    @staticmethod
    def print_catalog(last_verdicts=None):
        """Print the experiment catalog with the last recorded verdicts"""
        last_verdicts = last_verdicts or {}
        print(f"\n📋 EXPERIMENTS ({len(EXPERIMENTS)}):")
        for name, entry in EXPERIMENTS.items():
            last = last_verdicts.get(name)
            status = f"{_icon(last['passed'])} {last['date']}" if last else "   never run"
            print(f"\n   {name:22s} {status}")
            print(f"      {entry['anchor']}")

        print(f"\n🧮 OPERATOR FAMILIES:")
        for name, description in FAMILIES.items():
            print(f"   • {name:20s}: {description}")

    @staticmethod
    def save_report_files(report, out_dir=OUTPUT_DIR):
        """Save <family>-report.json and .csv"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{report.operator.family}-report"
        json_path = out_dir / f"{stem}.json"
        csv_path = out_dir / f"{stem}.csv"
        write_json(report.to_dict(), json_path)
        write_csv(report.to_frame(), csv_path)
        print(f"\n📁 Report saved: {json_path}")
        print(f"📁 Table saved:  {csv_path}")
        return json_path, csv_path

    @staticmethod
    def save_experiment(result, out_dir=OUTPUT_DIR):
        """Save <name>.csv and <name>.json"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / f"{result.name}.json"
        csv_path = out_dir / f"{result.name}.csv"
        write_json(result.to_dict(), json_path)
        write_csv(result.to_frame(), csv_path)
        print(f"   📁 {csv_path}")
        return json_path, csv_path

    @staticmethod
    def save_summary_text(results, filename=SUMMARY_OUTPUT):
        """Save text summary of an experiment batch"""
        try:
            with open(filename, "w", encoding="utf-8") as f:
                f.write("=" * Display.CONSOLE_WIDTH + "\n")
                f.write("FOCK SPACE LOCALIZATION LAB SUMMARY\n")
                f.write(f"{datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
                f.write("=" * Display.CONSOLE_WIDTH + "\n\n")

                for result in results:
                    verdict = "exploratory" if result.passed is None else ("PASS" if result.passed else "FAIL")
                    f.write(f"{result.name:24s} {verdict:12s} {result.runtime:8.1f}s\n")
                    f.write(f"  {result.rule}\n")

                decided = [r for r in results if r.passed is not None]
                passed = sum(1 for r in decided if r.passed)
                f.write(f"\nPASSED: {passed}/{len(decided)}\n")

            print(f"📝 Summary text saved: {filename}")
        except OSError as e:
            print(f"⚠️  Could not save text summary: {e}")

    @staticmethod
    def print_footer(success=True):
        """Print report footer"""
        print("\n" + "=" * Display.CONSOLE_WIDTH)
        print("✅ Run complete!" if success else "❌ Run finished with failed checks")
        print("=" * Display.CONSOLE_WIDTH + "\n")
