"""Fixture stand-in for fickling."""


def main():
    print("fickling (fixture build)")
    return 0
