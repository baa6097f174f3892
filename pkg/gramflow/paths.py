from pathlib import Path

repo_dir = Path(__file__).absolute().parent.parent

# run logs, experiment tables and summaries go here unless a config or --out says otherwise
results_dir = repo_dir / 'results'
