"""Fixture stand-in for eval-harness."""


def main():
    print("eval-harness (fixture build)")
    return 0
