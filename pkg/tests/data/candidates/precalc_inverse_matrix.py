class MATH_train_7423(BaseModel):
    a: float
    b: float

    @classmethod
    def original(cls) ->'Self':
        return cls(a=1 / 6, b=1 / 6)

    @classmethod
    def sample(cls) ->'Self':
        a = random.random() / 6
        b = random.random() / 6
        return cls(a=a, b=b)

    def solve(self) ->str:
        return f'\\boxed{{\\left({self.a}, {self.b}\\right)}}'

    def render(self) ->str:
        return (
            'Let $\\mathbf{{M}} = \\begin{pmatrix} 2 & 0 \\\\ 1 & -3 \\end{pmatrix}.$ Find constants $a$ and $b$ so that \\[\\mathbf{{M}}^{-1} = a \\mathbf{{M}} + b \\mathbf{{I}}.\\]'
            )
