from segkit.commands import ablate, evaluate, prepare, report, segment, synth, train, tune

# Registration order is the order shown by `segkit --help`
COMMANDS = (synth, prepare, train, tune, segment, evaluate, report, ablate)
