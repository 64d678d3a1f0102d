"""Fixture stand-in for cyberseceval."""


def main():
    print("cyberseceval (fixture build)")
    return 0
