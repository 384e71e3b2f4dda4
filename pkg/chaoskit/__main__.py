from chaoskit.cli import app

app(prog_name="chaoskit")
