"""Fixture stand-in for judges."""


def main():
    print("judges (fixture build)")
    return 0
