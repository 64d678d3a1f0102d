"""Prompt target for a model endpoint PyRIT does not support out of the box."""


class CustomEndpointTarget:
    def __init__(self, endpoint, headers=None):
        self.endpoint = endpoint
        self.headers = dict(headers or {})
