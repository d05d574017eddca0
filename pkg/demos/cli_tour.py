"""Run every shipped manifest through each command that applies and write the reports to demos/out/."""

from pathlib import Path

from bcalc.cli import COMMANDS, dumps, run

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "demos" / "out"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for manifest in sorted((ROOT / "manifests").glob("*.json")):
        for command in COMMANDS:
            report, csv_files, code = run(command, str(manifest))
            if code == 2 and not report.get("results"):
                continue
            (OUT / f"{manifest.stem}.{command}.json").write_text(dumps(report))
            for name, text in csv_files.items():
                (OUT / name).write_text(text)
            print(f"{manifest.stem:24s} {command:11s} exit {code}")


if __name__ == "__main__":
    main()
