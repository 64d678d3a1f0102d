"""LLM client used by the benchmarks."""


class LLM:
    def __init__(self, model, api_key=None):
        self.model = model
        self.api_key = api_key

    def query(self, prompt):
        return self._complete(prompt)

    def _complete(self, prompt):
        raise NotImplementedError
