from fastapi import FastAPI
from app.routers import degree, gallery, jacobian, seminorm, suite


app = FastAPI(
    title="Sobolev Degree Toolkit API",
    description="Gagliardo seminorms, distributional Jacobians and degree checks for fractional Sobolev maps.",
    version="1.0.0",
)


@app.get("/")
def read_root():
    return {"message": "Welcome to the Sobolev Degree Toolkit API"}


# Register router
app.include_router(gallery.router, prefix="/gallery", tags=["Gallery"])
app.include_router(degree.router, prefix="/degree", tags=["Degree"])
app.include_router(jacobian.router, prefix="/jacobian", tags=["Jacobian"])
app.include_router(seminorm.router, prefix="/seminorm", tags=["Seminorm"])
app.include_router(suite.router, prefix="/suite", tags=["Suite"])
