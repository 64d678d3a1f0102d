"""Fixture stand-in for giskard."""


def main():
    print("giskard (fixture build)")
    return 0
