from manim import *


class ArrowLabel(Scene):
    def construct(self):
        arrow = Arrow(LEFT * 2, RIGHT * 2, color=WHITE)
        box = Square(side_length=1, color=PURPLE).next_to(arrow, RIGHT)
        self.play(GrowArrow(arrow), run_time=0.6)
        self.play(FadeIn(box), run_time=0.4)
        self.wait(0.2)
