from manim import *


class SquareToCircle(Scene):
    def construct(self):
        square = Square(side_length=2, color=BLUE)
        circle = Circle(radius=1, color=RED)
        self.play(Create(square), run_time=0.6)
        self.play(Transform(square, circle), run_time=0.6)
        self.wait(0.2)
