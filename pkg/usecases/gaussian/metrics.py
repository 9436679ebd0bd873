import argparse
import json

import pandas as pd


def load_runs(path):
    with open(path, encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    runs = pd.DataFrame([r for r in records if r.get("type") == "run" and "error" not in r])
    failed = sum(1 for r in records if "error" in r)
    return runs, failed


def inversions(series, increasing):
    values = list(series)
    steps = zip(values, values[1:])
    if increasing:
        return sum(1 for a, b in steps if b < a)
    return sum(1 for a, b in steps if b > a)


def trend_report(runs):
    means = runs.groupby(["algo", "n"])[["tpr", "shd"]].mean()
    for algo in sorted(runs["algo"].unique()):
        curve = means.loc[algo].sort_index()
        print(f"{algo}: TPR inversions {inversions(curve['tpr'], True)}, "
              f"SHD inversions {inversions(curve['shd'], False)}")
    return means


def query_report(runs):
    paired = runs.pivot_table(index=["cell", "rep"], columns="algo", values="query_count")
    if "lcd" in paired and "stable" in paired:
        share = (paired["lcd"] <= paired["stable"]).mean()
        print(f"lcd issued no more tests than stable in {share:.0%} of runs")


def compare_to_original(runs):
    shd = runs.groupby("algo")["shd"].mean()
    if "pc" not in shd:
        return
    for algo, value in shd.items():
        if algo != "pc":
            verdict = "below" if value < shd["pc"] else "not below"
            print(f"{algo}: mean SHD {value:.2f}, {verdict} pc ({shd['pc']:.2f})")


parser = argparse.ArgumentParser(description="Summarize an ampcg bench report")
parser.add_argument("report", help="JSON lines file written by 'ampcg bench'")
parser.add_argument("--csv", help="Write the per-(algo, n) means to this CSV")
args = parser.parse_args()

runs, failed = load_runs(args.report)
print(f"##### Start summary of {args.report}: {len(runs)} runs, {failed} failed")
means = trend_report(runs)
query_report(runs)
compare_to_original(runs)
if args.csv:
    means.to_csv(args.csv)
    print(f"##### Saved means to: {args.csv}")
