"""Fixture stand-in for garak."""


def main():
    print("garak (fixture build)")
    return 0
