"""Fixture stand-in for fuzzyai."""


def main():
    print("fuzzyai (fixture build)")
    return 0
