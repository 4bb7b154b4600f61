class CollapsedSampler(BaseModel):
    x: int

    @classmethod
    def original(cls) -> 'Self':
        return cls(x=4)

    @classmethod
    def sample(cls) -> 'Self':
        return cls(x=random.randint(5, 5))

    def render(self) -> str:
        return f'What is {self.x} doubled?'

    def solve(self) -> str:
        return str(self.x * 2)
