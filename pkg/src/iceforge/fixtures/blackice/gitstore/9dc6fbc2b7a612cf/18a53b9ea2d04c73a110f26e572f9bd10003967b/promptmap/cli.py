"""Fixture stand-in for promptmap."""


def main():
    print("promptmap (fixture build)")
    return 0
