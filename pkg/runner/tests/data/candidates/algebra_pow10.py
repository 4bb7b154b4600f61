class MATH_train_5862(BaseModel):
    coefficient1: float
    coefficient2: float
    exponent1: int
    exponent2: int

    @classmethod
    def original(cls) ->'Self':
        return cls(coefficient1=9, coefficient2=3, exponent1=8, exponent2=3)

    @classmethod
    def sample(cls) ->'Self':
        coefficient1 = random.uniform(1, 10)
        coefficient2 = random.uniform(1, 10)
        exponent1 = random.randint(1, 10)
        exponent2 = random.randint(1, 10)
        return cls(coefficient1=coefficient1, coefficient2=coefficient2,
            exponent1=exponent1, exponent2=exponent2)

    def solve(self) ->str:
        result = self.coefficient1 / self.coefficient2 * 10 ** (self.
            exponent1 - self.exponent2)
        return str(int(result))

    def render(self) ->str:
        return (
            f'Simplify $({self.coefficient1} \\times 10^{{{self.exponent1}}} \\div ({self.coefficient2} \\times 10^{{{self.exponent2}}}$'
            )
