from vimp.cli import run

run()
